//! Emits a standalone matplotlib script for a set of result CSVs.

use std::fmt::Write as _;

/// One curve family: a results CSV next to the script, plus its legend label.
pub struct Curve {
    pub file: String,
    pub label: String,
}

/// Python source plotting RMS (solid), max (dashed) and the bound (dotted)
/// for each curve. `loglog` switches the x axis to log scale as well.
pub fn script(title: &str, curves: &[Curve], loglog: bool, with_bound: bool) -> String {
    let mut files = String::new();
    for c in curves {
        let _ = writeln!(files, "    ({:?}, {:?}),", c.file, c.label);
    }
    format!(
        r#"#!/usr/bin/env python3
# Generated by tvtrack. Run from this directory: python3 plot.py
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CURVES = [
{files}]
WITH_BOUND = {bound}


def load(name):
    with open(os.path.join(HERE, name)) as fh:
        rows = list(csv.DictReader(fh))
    col = lambda k: [float(r[k]) for r in rows]
    valid = [r["valid_from_flag"] == "1" for r in rows]
    return col("t"), col("rms_te"), col("max_te"), col("bound"), valid


fig, ax = plt.subplots(figsize=(7, 4.5))
for name, label in CURVES:
    t, rms, mx, bound, valid = load(name)
    (line,) = ax.plot(t, rms, label=f"{{label}} RMS")
    ax.plot(t, mx, "--", color=line.get_color(), label=f"{{label}} max")
    if WITH_BOUND:
        bt = [x for x, v in zip(t, valid) if v]
        bb = [b for b, v in zip(bound, valid) if v]
        ax.plot(bt, bb, ":", color=line.get_color(), label=f"{{label}} bound")
ax.set_yscale("log")
{xscale}ax.set_xlabel("t")
ax.set_ylabel("tracking error")
ax.set_title({title:?})
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "figure.png"), dpi=150)
"#,
        bound = if with_bound { "True" } else { "False" },
        xscale = if loglog { "ax.set_xscale(\"log\")\n" } else { "" },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_lists_every_curve() {
        let s = script(
            "demo",
            &[
                Curve { file: "uniform_E10.csv".into(), label: "E=10".into() },
                Curve { file: "uniform_E20.csv".into(), label: "E=20".into() },
            ],
            true,
            true,
        );
        assert!(s.contains("(\"uniform_E10.csv\", \"E=10\")"));
        assert!(s.contains("(\"uniform_E20.csv\", \"E=20\")"));
        assert!(s.contains("set_xscale"));
        assert!(s.contains("WITH_BOUND = True"));
        assert!(s.contains("f\"{label} RMS\""));
    }
}
