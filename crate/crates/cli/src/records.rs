//! Homodyne quadrature records and their reduction to binned moments.
//!
//! Wire format: CSV with header `phase_deg,value`, one record per line.

use std::io::{Read, Write};

use qbench_core::QuadratureMoments;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    /// Degrees in `[0, 360)`.
    pub phase_deg: f64,
    /// Quadrature sample, vacuum variance 1/2.
    pub value: f64,
}

impl QuadratureRecord {
    /// Wraps the phase into `[0, 360)`; rejects non-finite input.
    pub fn new(phase_deg: f64, value: f64) -> Result<Self> {
        if !phase_deg.is_finite() || !value.is_finite() {
            return Err(CliError::Invalid(format!("non-finite record ({phase_deg}, {value})")));
        }
        Ok(QuadratureRecord {
            phase_deg: wrap_degrees(phase_deg),
            value,
        })
    }
}

fn wrap_degrees(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Distance on the circle, in degrees.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<QuadratureRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Record { line: 1, message: e.to_string() })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["phase_deg", "value"] {
        return Err(CliError::Record {
            line: 1,
            message: format!("expected header `phase_deg,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Record {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64> {
            let text = row.get(i).unwrap_or("").trim();
            let v: f64 = text.parse().map_err(|_| CliError::Record {
                line,
                message: format!("`{text}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Record {
                    line,
                    message: format!("`{text}` is not finite"),
                });
            }
            Ok(v)
        };
        if row.len() != 2 {
            return Err(CliError::Record {
                line,
                message: format!("expected 2 fields, found {}", row.len()),
            });
        }
        out.push(QuadratureRecord::new(field(0)?, field(1)?)?);
    }
    Ok(out)
}

/// Writes records with shortest round-trip float formatting and LF endings.
pub fn write_records<W: Write>(writer: W, records: &[QuadratureRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let wrap = |e: csv::Error| CliError::Invalid(format!("writing records: {e}"));
    w.write_record(["phase_deg", "value"]).map_err(wrap)?;
    for r in records {
        w.write_record([r.phase_deg.to_string(), r.value.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::Invalid(format!("writing records: {e}")))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedMoments {
    pub angle: f64,
    pub n: usize,
    pub mean: f64,
    pub raw_second_moment: f64,
    pub se_mean: f64,
    pub se_second: f64,
}

pub const DEFAULT_BIN_SIZE: usize = 500;
pub const DEFAULT_ANGLE_TOLERANCE: f64 = 1.8;

/// Per requested angle: the `bin_size` records closest in phase (ties broken
/// by input order) among those within `tolerance` degrees, reduced to the
/// mean and raw second moment with their standard errors.
pub fn bin_and_estimate(
    records: &[QuadratureRecord],
    angles: &[f64],
    bin_size: usize,
    tolerance: f64,
) -> Result<Vec<BinnedMoments>> {
    if bin_size < 2 {
        return Err(CliError::Invalid(format!("bin size {bin_size} must be at least 2")));
    }
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(CliError::Invalid(format!("angle tolerance {tolerance} must be finite and nonnegative")));
    }
    angles
        .iter()
        .map(|&angle| {
            let mut near: Vec<(f64, usize)> = records
                .iter()
                .enumerate()
                .map(|(i, r)| (angular_distance(r.phase_deg, angle), i))
                .filter(|(d, _)| *d <= tolerance)
                .collect();
            if near.len() < bin_size {
                return Err(CliError::InsufficientRecords {
                    angle,
                    tolerance,
                    needed: bin_size,
                    found: near.len(),
                });
            }
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let values: Vec<f64> = near[..bin_size].iter().map(|&(_, i)| records[i].value).collect();
            Ok(estimate(angle, &values))
        })
        .collect()
}

fn estimate(angle: f64, v: &[f64]) -> BinnedMoments {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let second = v.iter().map(|x| x * x).sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // the sample second moment is the mean of x², so its error follows
    // from the spread of x²
    let var_sq = v.iter().map(|x| (x * x - second).powi(2)).sum::<f64>() / (n - 1.0);
    BinnedMoments {
        angle,
        n: v.len(),
        mean,
        raw_second_moment: second,
        se_mean: (var / n).sqrt(),
        se_second: (var_sq / n).sqrt(),
    }
}

/// Moments and standard errors from an `x` bin and a `p` bin.
pub fn moments_from_bins(x: &BinnedMoments, p: &BinnedMoments) -> (QuadratureMoments, QuadratureMoments) {
    (
        QuadratureMoments {
            x: x.mean,
            p: p.mean,
            x2: x.raw_second_moment,
            p2: p.raw_second_moment,
        },
        QuadratureMoments {
            x: x.se_mean,
            p: p.se_mean,
            x2: x.se_second,
            p2: p.se_second,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_rejections() {
        let recs = vec![
            QuadratureRecord::new(0.5, -1.25).unwrap(),
            QuadratureRecord::new(-90.0, 0.1).unwrap(),
        ];
        assert_eq!(recs[1].phase_deg, 270.0);
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "phase_deg,value\n0.5,-1.25\n270,0.1\n");
        assert_eq!(read_records(&buf[..]).unwrap(), recs);

        for bad in [
            "phase_deg,value\n0,NaN\n",
            "phase_deg,value\n0,inf\n",
            "phase_deg,value\n-inf,1\n",
            "phase,value\n0,1\n",
            "phase_deg,value\n0,abc\n",
            "phase_deg,value\n0,1,2\n",
        ] {
            assert!(read_records(bad.as_bytes()).is_err(), "{bad}");
        }
        let err = read_records("phase_deg,value\n0,1\n3,nan\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn constant_records_have_zero_error() {
        let recs: Vec<_> = (0..600).map(|i| QuadratureRecord::new(0.001 * i as f64, 2.0).unwrap()).collect();
        let b = bin_and_estimate(&recs, &[0.0], 500, 1.8).unwrap()[0];
        assert_eq!(b.n, 500);
        assert_eq!(b.mean, 2.0);
        assert_eq!(b.raw_second_moment, 4.0);
        assert_eq!(b.se_mean, 0.0);
        assert_eq!(b.se_second, 0.0);
    }

    #[test]
    fn bins_take_the_closest_records_and_wrap_around() {
        let mut recs = Vec::new();
        for i in 0..10 {
            recs.push(QuadratureRecord::new(359.0 + 0.1 * i as f64, i as f64).unwrap());
        }
        recs.push(QuadratureRecord::new(45.0, 100.0).unwrap());
        // 359.0..359.9 and then 0.0 after wrapping
        let b = bin_and_estimate(&recs, &[0.0], 3, 1.8).unwrap()[0];
        // distances 0.1, 0.2, 0.3 belong to values 9, 8, 7
        assert_eq!(b.mean, 8.0);
    }

    #[test]
    fn insufficient_records_name_the_angle() {
        let recs: Vec<_> = (0..10).map(|i| QuadratureRecord::new(i as f64, 0.0).unwrap()).collect();
        let err = bin_and_estimate(&recs, &[90.0], 5, 1.8).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("angle 90") && msg.contains("short by 5"), "{msg}");
    }
}
