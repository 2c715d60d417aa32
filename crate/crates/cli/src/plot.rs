//! gnuplot scripts for the written CSV files. Run `gnuplot plot.gp` inside
//! the output directory; it writes `plot.png`.

use crate::config::{Experiment, ExperimentConfig};

const PREAMBLE: &str = "set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'plot.png'\nset key outside right\nset grid\n";

fn series(header: &[String]) -> Vec<&str> {
    let mut out = Vec::new();
    for prefix in ["", "raw_", "ps_", "zne_", "exact_"] {
        for obs in ["p_updn", "p_upup"] {
            let name = format!("{prefix}{obs}");
            if let Some(h) = header.iter().find(|h| **h == name) {
                out.push(h.as_str());
            }
        }
    }
    out
}

fn title(col: &str) -> String {
    col.replace('_', " ")
}

pub fn script(cfg: &ExperimentConfig, header: &[String]) -> String {
    let mut s = String::from(PREAMBLE);
    match cfg.experiment {
        Experiment::Correlations => {
            s += "set multiplot layout 1,3\nset view map\nset size ratio -1\nunset key\n";
            s += "set title 'density'\nset xlabel 'site'\nplot 'density.csv' using 1:2 skip 1 with linespoints\n";
            s += "set title 'Gamma up-down'\nset xlabel 'i'\nset ylabel 'j'\nplot 'results.csv' using 1:2:3 skip 1 with image\n";
            s += "set title 'Gamma up'\nplot 'corr_up.csv' using 1:2:3 skip 1 with image\nunset multiplot\n";
        }
        Experiment::SweepTime => {
            s += "set xlabel 't (1/J_up)'\nset ylabel 'probability'\n";
            let mut parts = Vec::new();
            for d in &cfg.deltas {
                for col in series(header) {
                    parts.push(format!(
                        "'results.csv' using \"t\":(abs(column(\"delta\")-{d})<1e-9 ? column(\"{col}\") : NaN) with linespoints title '{} delta={d}'",
                        title(col)
                    ));
                }
            }
            if cfg.density {
                s += "# per-site densities are in columns n_0, n_1, ...\n";
            }
            s += &format!("plot {}\n", parts.join(", \\\n     "));
        }
        Experiment::SweepU | Experiment::SweepDelta | Experiment::Dissociation => {
            let x = if cfg.experiment == Experiment::SweepU { "u" } else { "delta" };
            s += &format!("set xlabel '{}'\nset ylabel 'probability'\n", if x == "u" { "U" } else { "delta = J_dn/J_up" });
            let parts: Vec<String> = series(header)
                .into_iter()
                .map(|col| format!("'results.csv' using \"{x}\":\"{col}\" with linespoints title '{}'", title(col)))
                .collect();
            s += &format!("plot {}\n", parts.join(", \\\n     "));
        }
    }
    s
}
