//! On-disk formats.
//!
//! | file          | columns / shape                                        |
//! |---------------|--------------------------------------------------------|
//! | teams         | `paper_id,team_size`                                   |
//! | distribution  | `bin_lo,bin_hi,bin_center,count,density`               |
//! | shares        | `period_label,events,direct,indirect,direct_share`     |
//! | gm            | `team_lo,team_hi,n_papers,gm`                          |
//! | fractions     | `count_lo,count_hi,n_papers,mean_direct_fraction`      |
//! | run           | JSON [`RunResult`]                                     |
//! | fit report    | JSON [`FitReport`]                                     |
//!
//! Every writer renders to memory first and then replaces the destination
//! atomically, so a failed command never leaves a partial file behind.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::RunResult;
use crate::error::{Error, Result};
use crate::fit::{FitResult, Param};
use crate::population::{load_team_sizes, TeamSizeVector};
use crate::stats::{BinnedDistribution, BinningScheme, FractionBucket, GmBucket, PeriodShare};

pub const TEAM_HEADER: [&str; 2] = ["paper_id", "team_size"];
pub const DISTRIBUTION_HEADER: [&str; 5] = ["bin_lo", "bin_hi", "bin_center", "count", "density"];
pub const SHARE_HEADER: [&str; 5] = ["period_label", "events", "direct", "indirect", "direct_share"];
pub const GM_HEADER: [&str; 4] = ["team_lo", "team_hi", "n_papers", "gm"];
pub const FRACTION_HEADER: [&str; 4] = ["count_lo", "count_hi", "n_papers", "mean_direct_fraction"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn render_csv<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn read_csv(path: &Path, expected: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::Ingestion {
            row: 0,
            message: format!(
                "{}: expected header {:?}, found {:?}",
                path.display(),
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.records()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err(path))
}

pub fn render_teams(teams: &TeamSizeVector) -> Vec<u8> {
    render_csv(
        TEAM_HEADER,
        teams
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, s)| [i.to_string(), s.to_string()]),
    )
}

pub fn write_teams(path: &Path, teams: &TeamSizeVector) -> Result<()> {
    write_atomic(path, &render_teams(teams))
}

/// Reads a team CSV. Row numbers in errors count data rows from 0.
pub fn read_teams(path: &Path) -> Result<TeamSizeVector> {
    let records = read_csv(path, &TEAM_HEADER)?;
    let mut sizes = Vec::with_capacity(records.len());
    for (row, rec) in records.iter().enumerate() {
        let id = rec.get(0).unwrap_or("").trim();
        if id.parse::<usize>().ok() != Some(row) {
            return Err(Error::Ingestion {
                row,
                message: format!("paper_id {id:?} out of sequence, expected {row}"),
            });
        }
        sizes.push(rec.get(1).unwrap_or("").to_string());
    }
    load_team_sizes(&sizes)
}

pub fn render_distribution(d: &BinnedDistribution) -> Vec<u8> {
    render_csv(
        DISTRIBUTION_HEADER,
        d.bins.iter().map(|b| {
            [
                b.lo.to_string(),
                b.hi.to_string(),
                b.center.to_string(),
                b.count.to_string(),
                b.density.to_string(),
            ]
        }),
    )
}

pub fn write_distribution(path: &Path, d: &BinnedDistribution) -> Result<()> {
    write_atomic(path, &render_distribution(d))
}

/// Reads a distribution CSV, validating its bins against `scheme`.
pub fn read_distribution(path: &Path, scheme: &BinningScheme) -> Result<BinnedDistribution> {
    let records = read_csv(path, &DISTRIBUTION_HEADER)?;
    let rows = records
        .iter()
        .enumerate()
        .map(|(row, rec)| {
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Ingestion {
                        row,
                        message: format!("{}: column {} is not a number", path.display(), DISTRIBUTION_HEADER[i]),
                    })
            };
            Ok((field(0)?, field(1)?, field(3)?))
        })
        .collect::<Result<Vec<_>>>()?;
    BinnedDistribution::from_rows(*scheme, &rows)
}

pub fn render_shares(shares: &[PeriodShare]) -> Vec<u8> {
    render_csv(
        SHARE_HEADER,
        shares.iter().map(|s| {
            [
                s.label.clone(),
                s.events.to_string(),
                s.direct.to_string(),
                s.indirect.to_string(),
                s.direct_share.map(|v| v.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

pub fn render_gm(buckets: &[GmBucket]) -> Vec<u8> {
    render_csv(
        GM_HEADER,
        buckets.iter().map(|b| {
            [
                b.team_lo.to_string(),
                b.team_hi.to_string(),
                b.n_papers.to_string(),
                b.gm.to_string(),
            ]
        }),
    )
}

pub fn render_fractions(buckets: &[FractionBucket]) -> Vec<u8> {
    render_csv(
        FRACTION_HEADER,
        buckets.iter().map(|b| {
            [
                b.lo.to_string(),
                b.hi.to_string(),
                b.n_papers.to_string(),
                b.mean_fraction.to_string(),
            ]
        }),
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_run(path: &Path) -> Result<RunResult> {
    read_json(path)
}

/// Fit report as written to disk: parameters keyed by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub best_params: std::collections::BTreeMap<String, f64>,
    pub best_objective: f64,
    pub best_kernel: crate::kernels::KernelSpec,
    pub surface: Vec<FitReportPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportPoint {
    pub params: std::collections::BTreeMap<String, f64>,
    pub objective: f64,
}

impl From<&FitResult> for FitReport {
    fn from(f: &FitResult) -> Self {
        let named = |ps: &[(Param, f64)]| ps.iter().map(|(p, v)| (p.name().to_string(), *v)).collect();
        FitReport {
            best_params: named(&f.best_params),
            best_objective: f.best_objective,
            best_kernel: f.best_kernel,
            surface: f
                .surface
                .iter()
                .map(|s| FitReportPoint {
                    params: named(&s.params),
                    objective: s.objective,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{log_binned, Histogram};

    #[test]
    fn team_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("teams.csv");
        let teams = TeamSizeVector::new(vec![3, 1, 200]).unwrap();
        write_teams(&path, &teams).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "paper_id,team_size\n0,3\n1,1\n2,200\n");
        assert_eq!(read_teams(&path).unwrap(), teams);
    }

    #[test]
    fn team_csv_errors_name_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "paper_id,team_size\n0,3\n1,0\n").unwrap();
        assert!(matches!(read_teams(&path), Err(Error::Ingestion { row: 1, .. })));
        std::fs::write(&path, "paper_id,team_size\n0,3\n2,4\n").unwrap();
        assert!(matches!(read_teams(&path), Err(Error::Ingestion { row: 1, .. })));
        std::fs::write(&path, "paper_id,team_size\n").unwrap();
        assert!(matches!(read_teams(&path), Err(Error::EmptyCohort)));
        std::fs::write(&path, "id,size\n0,1\n").unwrap();
        assert!(matches!(read_teams(&path), Err(Error::Ingestion { row: 0, .. })));
        assert!(matches!(
            read_teams(&dir.path().join("missing.csv")),
            Err(Error::Csv { .. })
        ));
    }

    #[test]
    fn distribution_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let s = BinningScheme::default();
        let d = log_binned(&Histogram::from([(0, 3), (5, 2), (40, 7), (2042, 1)]), &s);
        write_distribution(&path, &d).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("bin_lo,bin_hi,bin_center,count,density\n0.5,1.5,1,3,"));
        let back = read_distribution(&path, &s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("no/such/dir/x"), b"z").is_err());
    }
}
