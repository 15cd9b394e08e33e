//! Plain-text symbol serialization: header `dim=<d>`, then one line per
//! coefficient `alpha_1 ... alpha_d re im`. Floats are written in shortest
//! round-trip form, so write→read is exact.

use num_complex::Complex64;

use super::Symbol;
use crate::error::{Error, Result};

impl Symbol {
    pub fn to_text(&self) -> String {
        let mut out = format!("dim={}\n", self.dim());
        for (alpha, c) in self.coefficients() {
            for a in alpha {
                out.push_str(&a.to_string());
                out.push(' ');
            }
            out.push_str(&format!("{} {}\n", c.re, c.im));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::MatrixFormat("empty symbol file".into()))?
            .trim();
        let dim: usize = header
            .strip_prefix("dim=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::MatrixFormat(format!("bad symbol header `{header}`")))?;
        let mut entries = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != dim + 2 {
                return Err(Error::MatrixFormat(format!(
                    "expected {} fields, got {} in `{line}`",
                    dim + 2,
                    fields.len()
                )));
            }
            let mut alpha = Vec::with_capacity(dim);
            for f in &fields[..dim] {
                alpha.push(
                    f.parse::<i64>()
                        .map_err(|_| Error::MatrixFormat(format!("bad index `{f}`")))?,
                );
            }
            let re: f64 = fields[dim]
                .parse()
                .map_err(|_| Error::MatrixFormat(format!("bad float `{}`", fields[dim])))?;
            let im: f64 = fields[dim + 1]
                .parse()
                .map_err(|_| Error::MatrixFormat(format!("bad float `{}`", fields[dim + 1])))?;
            entries.push((alpha, Complex64::new(re, im)));
        }
        Self::from_coefficients(&entries, dim)
    }
}
