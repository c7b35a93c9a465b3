//! File formats: NPY v1.0 tensors and masks, PGM slice exports and the
//! CSV iteration log.
//!
//! Tensors are stored as little-endian float64 (`<f8`), masks as uint8
//! (`|u1`, values 0 or 1), both in C order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use npyz::{DType, NpyFile, Order, WriterBuilder};

use crate::error::{Error, Result};
use crate::solver::{IterationLog, ObservationMask};
use crate::tensor::DenseTensor;

const F64_DESCR: &str = "<f8";
const U8_DESCR: &str = "|u1";

fn npy_err(e: impl std::fmt::Display) -> Error {
    Error::Npy(e.to_string())
}

fn open_npy<R: Read>(reader: R, expected: &str) -> Result<(NpyFile<R>, Vec<usize>)> {
    let file = NpyFile::new(reader).map_err(npy_err)?;
    let descr = match file.header().dtype() {
        DType::Plain(ts) => ts.to_string(),
        other => format!("{:?}", other.descr()),
    };
    // `|u1` and `<u1` describe the same bytes.
    let matches = descr == expected || (expected == U8_DESCR && descr == "<u1");
    if !matches {
        return Err(Error::DtypeMismatch {
            expected: expected.into(),
            actual: descr,
        });
    }
    if file.order() == Order::Fortran {
        return Err(Error::Npy(
            "fortran_order arrays are not supported; save the array in C order".into(),
        ));
    }
    let shape: Vec<usize> = file.shape().iter().map(|&d| d as usize).collect();
    Ok((file, shape))
}

pub fn read_tensor_from<R: Read>(reader: R) -> Result<DenseTensor> {
    let (file, shape) = open_npy(reader, F64_DESCR)?;
    let numel: usize = shape.iter().product();
    let data: Vec<f64> = file.into_vec().map_err(npy_err)?;
    if data.len() != numel {
        return Err(Error::Npy(format!(
            "payload holds {} values, header shape {:?} needs {numel}",
            data.len(),
            shape
        )));
    }
    DenseTensor::new(shape, data)
}

pub fn write_tensor_to<W: Write>(t: &DenseTensor, writer: W) -> Result<()> {
    let shape: Vec<u64> = t.shape().iter().map(|&d| d as u64).collect();
    let mut w = npyz::WriteOptions::<f64>::new()
        .default_dtype()
        .shape(&shape)
        .writer(writer)
        .begin_nd()?;
    w.extend(t.data().iter().copied())?;
    w.finish()?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_tensor_from(BufReader::new(File::open(path)?))
}

pub fn write_tensor(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor_to(t, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_mask_from<R: Read>(reader: R) -> Result<ObservationMask> {
    let (file, shape) = open_npy(reader, U8_DESCR)?;
    let raw: Vec<u8> = file.into_vec().map_err(npy_err)?;
    if raw.len() != shape.iter().product::<usize>() {
        return Err(Error::Npy("mask payload does not match its shape".into()));
    }
    let observed = raw
        .iter()
        .map(|&v| match v {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Npy(format!("mask values must be 0 or 1, found {other}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    ObservationMask::new(shape, observed)
}

pub fn write_mask_to<W: Write>(mask: &ObservationMask, writer: W) -> Result<()> {
    let shape: Vec<u64> = mask.shape().iter().map(|&d| d as u64).collect();
    let mut w = npyz::WriteOptions::<u8>::new()
        .default_dtype()
        .shape(&shape)
        .writer(writer)
        .begin_nd()?;
    w.extend(mask.as_slice().iter().map(|&o| o as u8))?;
    w.finish()?;
    Ok(())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<ObservationMask> {
    read_mask_from(BufReader::new(File::open(path)?))
}

pub fn write_mask(mask: &ObservationMask, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mask_to(mask, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes slice `index` (see [`DenseTensor::matrix_slices`]) as an 8-bit
/// binary PGM, min-max scaled to `0..=255`. A constant slice maps to 0.
pub fn write_pgm(t: &DenseTensor, index: usize, path: impl AsRef<Path>) -> Result<()> {
    let slices = t.matrix_slices();
    let slice = slices.get(index).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "slice {index} out of range, tensor has {} slices",
            slices.len()
        ))
    })?;
    let (lo, hi) = slice
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", slice.ncols(), slice.nrows())?;
    let mut bytes = Vec::with_capacity(slice.len());
    for r in 0..slice.nrows() {
        for c in 0..slice.ncols() {
            let v = if span > 0.0 {
                ((slice[(r, c)] - lo) / span * 255.0).round()
            } else {
                0.0
            };
            bytes.push(v.clamp(0.0, 255.0) as u8);
        }
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Header of the iteration log for the given mode-pair numbers:
/// `iter,rel_change,primal_q,multiplier_q,...,objective,rho_capped`.
pub fn log_header(qs: &[usize]) -> Vec<String> {
    let mut h = vec!["iter".to_string(), "rel_change".to_string()];
    for q in qs {
        h.push(format!("primal_{q}"));
        h.push(format!("multiplier_{q}"));
    }
    h.push("objective".into());
    h.push("rho_capped".into());
    h
}

/// Writes the iteration log as CSV. Wall time is left out so that logs of
/// identical runs are byte-identical.
pub fn write_log_to<W: Write>(log: &[IterationLog], qs: &[usize], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(log_header(qs)).map_err(csv_err)?;
    for entry in log {
        let mut row = vec![entry.iter.to_string(), entry.rel_change.to_string()];
        for (p, m) in entry.primal_residuals.iter().zip(&entry.multiplier_norms) {
            row.push(p.to_string());
            row.push(m.to_string());
        }
        row.push(entry.objective.to_string());
        row.push((entry.rho_capped as u8).to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_log(log: &[IterationLog], qs: &[usize], path: impl AsRef<Path>) -> Result<()> {
    write_log_to(log, qs, File::create(path)?)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidParameter(format!("csv: {e}"))
}

/// Parses a log written by [`write_log_to`]; wall times read back as 0.
pub fn read_log_from<R: Read>(reader: R) -> Result<(Vec<usize>, Vec<IterationLog>)> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    let bad = |msg: &str| Error::InvalidParameter(format!("malformed iteration log: {msg}"));
    if header.len() < 4 || header.len() % 2 != 0 {
        return Err(bad("unexpected column count"));
    }
    let pairs = (header.len() - 4) / 2;
    let qs = (0..pairs)
        .map(|i| {
            header[2 + 2 * i]
                .strip_prefix("primal_")
                .and_then(|q| q.parse().ok())
                .ok_or_else(|| bad("bad primal column name"))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(&rec[i])) };
        out.push(IterationLog {
            iter: rec[0].parse().map_err(|_| bad(&rec[0]))?,
            rel_change: num(1)?,
            primal_residuals: (0..pairs).map(|i| num(2 + 2 * i)).collect::<Result<_>>()?,
            multiplier_norms: (0..pairs).map(|i| num(3 + 2 * i)).collect::<Result<_>>()?,
            objective: num(2 + 2 * pairs)?,
            rho_capped: &rec[3 + 2 * pairs] == "1",
            wall_time: 0.0,
        });
    }
    Ok((qs, out))
}
