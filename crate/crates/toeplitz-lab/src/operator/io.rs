//! Matrix export: a 32-byte-header binary of column-major float64 re/im
//! pairs, plus a CSV debug listing of entries above 1e-14.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{OperatorMatrix, Space};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TMLB";
const VERSION: u32 = 1;

impl OperatorMatrix {
    /// Binary layout: magic "TMLB", version u32, space tag u32 (0 half-line,
    /// 1 lattice box), n u32 (truncation or box radius), d u32, hermitian u8,
    /// 11 zero pad bytes; then column-major (re, im) little-endian f64 pairs.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut header = Vec::with_capacity(32);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        let (tag, n, d) = match self.space {
            Space::HalfLine { n } => (0u32, n as u32, 1u32),
            Space::LatticeBox { dim, radius } => (1u32, radius as u32, dim as u32),
        };
        header.extend_from_slice(&tag.to_le_bytes());
        header.extend_from_slice(&n.to_le_bytes());
        header.extend_from_slice(&d.to_le_bytes());
        header.push(self.hermitian as u8);
        header.resize(32, 0);
        let mut file = std::fs::File::create(path)?;
        file.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for col in self.data.column_iter() {
            for z in col.iter() {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        file.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut file = std::fs::File::open(path)?;
        let mut header = [0u8; 32];
        file.read_exact(&mut header)?;
        if &header[0..4] != MAGIC {
            return Err(Error::MatrixFormat("bad magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::MatrixFormat(format!("unsupported version {version}")));
        }
        let tag = u32::from_le_bytes(header[8..12].try_into().unwrap());
        let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
        let space = match tag {
            0 => Space::HalfLine { n },
            1 => Space::LatticeBox { dim: d, radius: n },
            other => return Err(Error::MatrixFormat(format!("unknown space tag {other}"))),
        };
        let m = space.matrix_dim();
        let mut raw = vec![0u8; m * m * 16];
        file.read_exact(&mut raw)?;
        let mut vals = Vec::with_capacity(m * m);
        for chunk in raw.chunks_exact(16) {
            let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
            vals.push(Complex64::new(re, im));
        }
        // vals holds column-major data
        let data = DMatrix::from_vec(m, m, vals);
        Ok(Self::from_data(space, data, "imported"))
    }

    /// Debug CSV `row,col,re,im` (1-based indices) for entries above 1e-14.
    pub fn write_csv_debug(&self, path: &Path) -> Result<()> {
        let mut out = String::from("row,col,re,im\n");
        let n = self.data.nrows();
        for i in 0..n {
            for j in 0..n {
                let z = self.data[(i, j)];
                if z.norm() > 1e-14 {
                    out.push_str(&format!("{},{},{:.16e},{:.16e}\n", i + 1, j + 1, z.re, z.im));
                }
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}
