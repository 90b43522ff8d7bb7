use std::io::Write;

use super::SeriesResult;
use crate::error::Result;
use crate::weights::WeightScheme;

pub const RESULTS_HEADER: &str = "t,rms_te,max_te,bound,valid_from_flag";

/// `<scheme>_E<budget>.csv`
pub fn series_file_name(scheme: &WeightScheme, budget: u32) -> String {
    format!("{}_E{budget}.csv", scheme.label())
}

/// Results CSV; floats carry 17 significant digits.
pub fn write_series_csv<W: Write>(out: &mut W, series: &SeriesResult) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in &series.rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{}",
            r.t,
            r.rms_te,
            r.max_te,
            r.bound,
            u8::from(r.valid)
        )?;
    }
    Ok(())
}
