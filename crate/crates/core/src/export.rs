// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! On-disk formats.
//!
//! * JSON triplets (`qtrap-triplets/1`): `{"format", "shape", "route",
//!   "params", "entries": [[index, re, im], ...]}`. For matrices `index` is
//!   the column-major flat index `row + col * rows`. Zero entries are omitted.
//! * Binary matrix dump (`QTRAPMAT`, version 1), all little-endian:
//!   magic `b"QTRAPMAT"`, `u32` version, `u64` rows, `u64` cols,
//!   `u32` route length + UTF-8 route, `u32` parameter count, then per
//!   parameter `u32` name length + UTF-8 name + `f64` value, then
//!   `rows * cols` pairs of `f64` (re, im) in column-major order.
//! * CSV files start with one `# qtrap-<kind>/1` version line. Floats are
//!   written with 17 significant digits.

use std::io::{self, BufWriter, Read, Write};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::CMatrix;
use crate::dynamics::{CVector, Trajectory};
use crate::error::{Error, Result};
use crate::observables::{InversionSeries, QGrid};

pub const TRIPLET_FORMAT: &str = "qtrap-triplets/1";
pub const BINARY_MAGIC: &[u8; 8] = b"QTRAPMAT";
pub const BINARY_VERSION: u32 = 1;

/// Float formatting used in every CSV: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletDump {
    pub format: String,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    #[serde(default)]
    pub params: serde_json::Value,
    pub entries: Vec<(usize, f64, f64)>,
}

fn nonzero_entries<'a>(it: impl Iterator<Item = &'a Complex64>) -> Vec<(usize, f64, f64)> {
    it.enumerate()
        .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
        .map(|(i, z)| (i, z.re, z.im))
        .collect()
}

impl TripletDump {
    pub fn from_vector(v: &CVector, params: serde_json::Value) -> Self {
        Self {
            format: TRIPLET_FORMAT.to_owned(),
            shape: vec![v.len()],
            route: None,
            params,
            entries: nonzero_entries(v.iter()),
        }
    }

    pub fn from_matrix(m: &CMatrix, route: Option<&str>, params: serde_json::Value) -> Self {
        Self {
            format: TRIPLET_FORMAT.to_owned(),
            shape: vec![m.nrows(), m.ncols()],
            route: route.map(str::to_owned),
            params,
            entries: nonzero_entries(m.iter()),
        }
    }

    fn check(&self, len: usize) -> Result<()> {
        if self.format != TRIPLET_FORMAT {
            return Err(Error::Format(format!(
                "unknown triplet format {:?}",
                self.format
            )));
        }
        if let Some(&(i, _, _)) = self.entries.iter().find(|(i, _, _)| *i >= len) {
            return Err(Error::Format(format!("entry index {i} out of range {len}")));
        }
        Ok(())
    }

    pub fn to_vector(&self) -> Result<CVector> {
        let [n] = self.shape[..] else {
            return Err(Error::Format(format!(
                "vector shape expected, got {:?}",
                self.shape
            )));
        };
        self.check(n)?;
        let mut v = DVector::zeros(n);
        for &(i, re, im) in &self.entries {
            v[i] = Complex64::new(re, im);
        }
        Ok(v)
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let [rows, cols] = self.shape[..] else {
            return Err(Error::Format(format!(
                "matrix shape expected, got {:?}",
                self.shape
            )));
        };
        self.check(rows * cols)?;
        let mut m = CMatrix::zeros(rows, cols);
        for &(i, re, im) in &self.entries {
            m[(i % rows, i / rows)] = Complex64::new(re, im);
        }
        Ok(m)
    }
}

/// A matrix read back from the binary dump.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMatrix {
    pub mat: CMatrix,
    pub route: String,
    pub params: Vec<(String, f64)>,
}

fn put_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

pub fn write_matrix_binary<W: Write>(
    mut w: W,
    m: &CMatrix,
    route: &str,
    params: &[(&str, f64)],
) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    put_str(&mut w, route)?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, value) in params {
        put_str(&mut w, name)?;
        w.write_all(&value.to_le_bytes())?;
    }
    for z in m.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated dump: {e}")))?;
    Ok(buf)
}

fn take_str<R: Read>(r: &mut R) -> Result<String> {
    let len = u32::from_le_bytes(take(r)?) as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated dump: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_matrix_binary<R: Read>(mut r: R) -> Result<BinaryMatrix> {
    if &take::<8, _>(&mut r)? != BINARY_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != BINARY_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(take(&mut r)?) as usize;
    let cols = u64::from_le_bytes(take(&mut r)?) as usize;
    let route = take_str(&mut r)?;
    let count = u32::from_le_bytes(take(&mut r)?) as usize;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let name = take_str(&mut r)?;
        params.push((name, f64::from_le_bytes(take(&mut r)?)));
    }
    let mut mat = CMatrix::zeros(rows, cols);
    for z in mat.iter_mut() {
        let re = f64::from_le_bytes(take(&mut r)?);
        let im = f64::from_le_bytes(take(&mut r)?);
        *z = Complex64::new(re, im);
    }
    Ok(BinaryMatrix { mat, route, params })
}

/// `t,w` rows.
pub fn write_inversion_csv<W: Write>(w: W, series: &InversionSeries) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "# qtrap-inversion/1")?;
    writeln!(w, "t,w")?;
    for (t, v) in series.times.iter().zip(&series.w) {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// `t` followed by interleaved `re,im` of every joint amplitude in layout
/// order (`g0..g{D-1}`, `e0..e{D-1}`).
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(w);
    let Some(first) = traj.states.first() else {
        return Err(Error::invalid("trajectory", "empty"));
    };
    let d = first.dim.get();
    writeln!(w, "# qtrap-trajectory/1 D={d}")?;
    let mut header = vec!["t".to_owned()];
    for s in ["g", "e"] {
        for n in 0..d {
            header.push(format!("re_{s}{n}"));
            header.push(format!("im_{s}{n}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![fmt_f64(*t)];
        for z in state.amps.iter() {
            row.push(fmt_f64(z.re));
            row.push(fmt_f64(z.im));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Matrix layout: header row `im\re` plus the real axis, then one row per
/// imaginary-axis value.
pub fn write_qgrid_csv<W: Write>(w: W, grid: &QGrid) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "# qtrap-qgrid-matrix/1")?;
    let mut header = vec!["im\\re".to_owned()];
    header.extend(grid.re_axis.iter().map(|x| fmt_f64(*x)));
    writeln!(w, "{}", header.join(","))?;
    for (im, row) in grid.im_axis.iter().zip(&grid.values) {
        let mut line = vec![fmt_f64(*im)];
        line.extend(row.iter().map(|x| fmt_f64(*x)));
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Flat `re,im,q` rows, real axis fastest.
pub fn write_qgrid_triplets<W: Write>(w: W, grid: &QGrid) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "# qtrap-qgrid-triplets/1")?;
    writeln!(w, "re,im,q")?;
    for (im, row) in grid.im_axis.iter().zip(&grid.values) {
        for (re, v) in grid.re_axis.iter().zip(row) {
            writeln!(w, "{},{},{}", fmt_f64(*re), fmt_f64(*im), fmt_f64(*v))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_matrix() -> impl Strategy<Value = CMatrix> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), r * c).prop_map(move |v| {
                CMatrix::from_iterator(r, c, v.into_iter().map(|(a, b)| Complex64::new(a, b)))
            })
        })
    }

    proptest! {
        #[test]
        fn binary_round_trip(m in arb_matrix(), eps in 0.0f64..1.0) {
            let mut buf = Vec::new();
            write_matrix_binary(&mut buf, &m, "q_closed", &[("epsilon", eps), ("q", 1.003)]).unwrap();
            let back = read_matrix_binary(&buf[..]).unwrap();
            prop_assert_eq!(&back.mat, &m);
            prop_assert_eq!(back.route.as_str(), "q_closed");
            prop_assert_eq!(back.params, vec![("epsilon".to_owned(), eps), ("q".to_owned(), 1.003)]);
        }

        #[test]
        fn json_triplet_round_trip(m in arb_matrix()) {
            let dump = TripletDump::from_matrix(&m, Some("x"), serde_json::json!({}));
            let text = serde_json::to_string(&dump).unwrap();
            let back: TripletDump = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_matrix().unwrap(), m);
        }
    }

    #[test]
    fn column_major_indexing() {
        let m = CMatrix::from_row_slice(
            2,
            3,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(2.0, -1.0),
            ],
        );
        let dump = TripletDump::from_matrix(&m, None, serde_json::Value::Null);
        assert_eq!(dump.entries, vec![(2, 1.0, 0.0), (5, 2.0, -1.0)]);
        let v = CVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
        assert_eq!(
            TripletDump::from_vector(&v, serde_json::Value::Null).entries,
            vec![(0, 0.5, 0.0)]
        );
    }

    #[test]
    fn rejects_corrupt_dumps() {
        assert!(matches!(
            read_matrix_binary(&b"NOTAMATRIX"[..]),
            Err(Error::Format(_))
        ));
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &CMatrix::identity(3, 3), "r", &[]).unwrap();
        buf.truncate(buf.len() - 4);
        assert!(matches!(
            read_matrix_binary(&buf[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn csv_precision() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        let series = InversionSeries {
            times: vec![0.0, 0.5],
            w: vec![-1.0, 0.25],
        };
        let mut out = Vec::new();
        write_inversion_csv(&mut out, &series).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# qtrap-inversion/1");
        assert_eq!(lines[1], "t,w");
        let back: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 0.25);
    }
}
