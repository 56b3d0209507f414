//! CSV and JSON emitters. Numbers are written as `{:.16e}`, so reruns of a
//! configuration reproduce files byte for byte.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header and numeric rows; integer-valued columns listed in
/// `int_cols` are written without exponent.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>], int_cols: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        let rec: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if int_cols.contains(&i) {
                    format!("{}", *v as i64)
                } else {
                    fmt_num(*v)
                }
            })
            .collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `index,sigma_ad,sigma_fd`; the shorter column is padded with NaN.
pub fn write_spectrum(path: &Path, ad: &[f64], fd: &[f64]) -> Result<()> {
    let n = ad.len().max(fd.len());
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            vec![
                (i + 1) as f64,
                ad.get(i).copied().unwrap_or(f64::NAN),
                fd.get(i).copied().unwrap_or(f64::NAN),
            ]
        })
        .collect();
    write_csv(path, &["index", "sigma_ad", "sigma_fd"], &rows, &[0])
}

/// `index,sigma` for an extra FD variant.
pub fn write_single_spectrum(path: &Path, sigma: &[f64]) -> Result<()> {
    let rows: Vec<Vec<f64>> = sigma.iter().enumerate().map(|(i, s)| vec![(i + 1) as f64, *s]).collect();
    write_csv(path, &["index", "sigma"], &rows, &[0])
}

/// `P,rel_residual_ad,rel_residual_fd` over the union of positions.
pub fn write_sweep(path: &Path, ad: &[(usize, f64)], fd: &[(usize, f64)]) -> Result<()> {
    let mut ps: Vec<usize> = ad.iter().chain(fd).map(|e| e.0).collect();
    ps.sort_unstable();
    ps.dedup();
    let find = |v: &[(usize, f64)], p: usize| v.iter().find(|e| e.0 == p).map_or(f64::NAN, |e| e.1);
    let rows: Vec<Vec<f64>> = ps.iter().map(|&p| vec![p as f64, find(ad, p), find(fd, p)]).collect();
    write_csv(path, &["P", "rel_residual_ad", "rel_residual_fd"], &rows, &[0])
}

pub fn write_single_sweep(path: &Path, entries: &[(usize, f64)]) -> Result<()> {
    let rows: Vec<Vec<f64>> = entries.iter().map(|(p, r)| vec![*p as f64, *r]).collect();
    write_csv(path, &["P", "rel_residual"], &rows, &[0])
}

pub fn write_training(path: &Path, records: &[crate::training::HistoryRecord]) -> Result<()> {
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| vec![r.step as f64, r.loss_pinn, r.loss_f, r.rel_train_err, r.rel_l2_err])
        .collect();
    write_csv(
        path,
        &["step", "loss_pinn", "loss_f", "rel_train_err", "rel_l2_err"],
        &rows,
        &[0],
    )
}

pub fn write_kernel_spectrum(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let rows: Vec<Vec<f64>> = eigenvalues.iter().enumerate().map(|(i, l)| vec![(i + 1) as f64, *l]).collect();
    write_csv(path, &["index", "eigenvalue"], &rows, &[0])
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
