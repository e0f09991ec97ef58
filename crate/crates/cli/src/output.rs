//! Run artifacts on disk: CSV tables for diagnostics, snapshots, and
//! trajectories, plus the resolved configuration copy.
//!
//! Floats are written with the shortest decimal representation that parses
//! back to the identical bits, so a write/read cycle is lossless and reruns
//! can be compared byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use vlasov_core::diagnostics::{DiagnosticRecord, DiagnosticSpec};
use vlasov_core::field::Exponent;
use vlasov_core::runner::{GhostPair, Trajectory};
use vlasov_core::{Ensemble, Model, Particle, RadialPoint};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const GHOSTS_FILE: &str = "ghosts.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ASYMPTOTICS_FILE: &str = "asymptotics.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Column label for a field norm of the given order.
pub fn e_column(p: Exponent) -> String {
    match p {
        Exponent::Inf => "E_inf".into(),
        Exponent::Finite(_) => format!("E_p{}", p.column_tag()),
    }
}

/// Column label for a density norm of the given order.
pub fn rho_column(q: Exponent) -> String {
    match q {
        Exponent::Inf => "rho_inf".into(),
        Exponent::Finite(_) => format!("rho_q{}", q.column_tag()),
    }
}

/// Header of the diagnostics table, in the fixed column order.
pub fn diagnostics_header(spec: &DiagnosticSpec) -> Vec<String> {
    let mut h = vec!["time".to_string(), "mass".into(), "energy".into()];
    for c in &spec.casimirs {
        h.push(format!("casimir_{}", c.name()));
    }
    for &p in &spec.e_exponents {
        h.push(e_column(p));
    }
    for &q in &spec.rho_exponents {
        h.push(rho_column(q));
    }
    h.extend(["R_sup".into(), "W_sup".into(), "speed_sup".into(), "clamp_events".into()]);
    h
}

fn fmt_row(values: &[f64]) -> String {
    let mut line = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        let _ = write!(line, "{v}");
    }
    line
}

/// A CSV table of named float columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    /// Column-major values, aligned with `header`.
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("table has no column {name:?}"))?;
        Ok(&self.columns[i])
    }

    /// Columns whose name starts with `prefix`, in header order.
    pub fn columns_with_prefix(&self, prefix: &str) -> Vec<(&str, &[f64])> {
        self.header
            .iter()
            .zip(&self.columns)
            .filter(|(h, _)| h.starts_with(prefix))
            .map(|(h, c)| (h.as_str(), c.as_slice()))
            .collect()
    }
}

/// Write a float table as CSV.
pub fn write_table(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        if row.len() != header.len() {
            bail!(
                "row with {} values does not match the {}-column header",
                row.len(),
                header.len()
            );
        }
        text.push_str(&fmt_row(&row));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Read a float-valued CSV table.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .with_context(|| format!("{} is empty", path.display()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut n = 0usize;
        for (i, cell) in line.split(',').enumerate() {
            if i >= header.len() {
                bail!("{} line {}: too many cells", path.display(), lineno + 2);
            }
            let v: f64 = cell.parse().with_context(|| {
                format!("{} line {}: bad float {cell:?}", path.display(), lineno + 2)
            })?;
            columns[i].push(v);
            n = i + 1;
        }
        if n != header.len() {
            bail!(
                "{} line {}: {} cells under a {}-column header",
                path.display(),
                lineno + 2,
                n,
                header.len()
            );
        }
    }
    Ok(Table { header, columns })
}

fn record_row(rec: &DiagnosticRecord) -> Vec<f64> {
    let mut row = vec![rec.time, rec.mass, rec.energy];
    row.extend_from_slice(&rec.casimirs);
    row.extend_from_slice(&rec.e_norms);
    row.extend_from_slice(&rec.rho_norms);
    row.extend([rec.r_sup, rec.w_sup, rec.speed_sup, rec.clamp_events as f64]);
    row
}

/// Write the per-record diagnostics table.
pub fn write_diagnostics(dir: &Path, spec: &DiagnosticSpec, records: &[DiagnosticRecord]) -> Result<()> {
    write_table(
        &dir.join(DIAGNOSTICS_FILE),
        &diagnostics_header(spec),
        records.iter().map(record_row),
    )
}

pub fn read_diagnostics(dir: &Path) -> Result<Table> {
    read_table(&dir.join(DIAGNOSTICS_FILE))
}

/// File name for the snapshot taken at `time`.
pub fn snapshot_file(time: f64) -> String {
    format!("snapshot_{time}.csv")
}

const SNAPSHOT_HEADER: [&str; 4] = ["r", "w", "ell", "weight"];

pub fn write_snapshot(dir: &Path, time: f64, e: &Ensemble) -> Result<()> {
    let header: Vec<String> = SNAPSHOT_HEADER.iter().map(|s| s.to_string()).collect();
    write_table(
        &dir.join(snapshot_file(time)),
        &header,
        e.particles
            .iter()
            .map(|p| vec![p.state.r, p.state.w, p.state.ell, p.weight]),
    )
}

/// Read one snapshot back into an ensemble; `model` and `time` come from the
/// run configuration and the file name.
pub fn read_snapshot(path: &Path, model: Model, time: f64) -> Result<Ensemble> {
    let t = read_table(path)?;
    if t.header != SNAPSHOT_HEADER {
        bail!(
            "{}: expected columns r,w,ell,weight, found {}",
            path.display(),
            t.header.join(",")
        );
    }
    let mut particles = Vec::with_capacity(t.rows());
    for i in 0..t.rows() {
        particles.push(Particle {
            state: RadialPoint {
                r: t.columns[0][i],
                w: t.columns[1][i],
                ell: t.columns[2][i],
            },
            weight: t.columns[3][i],
        });
    }
    Ok(Ensemble::new(model, time, particles))
}

/// All snapshots in a run directory, sorted by time.
pub fn read_snapshots(dir: &Path, model: Model) -> Result<Vec<(f64, Ensemble)>> {
    let mut found: Vec<(f64, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(stamp) = name.strip_prefix("snapshot_").and_then(|s| s.strip_suffix(".csv")) {
            let time: f64 = stamp
                .parse()
                .with_context(|| format!("snapshot file {name:?}: bad time stamp"))?;
            found.push((time, path));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found
        .into_iter()
        .map(|(time, path)| Ok((time, read_snapshot(&path, model, time)?)))
        .collect()
}

const TRAJECTORY_HEADER: [&str; 6] = ["id", "time", "r", "w", "ell", "m_at_r"];

/// Write the tracked-shell histories, one sample per row grouped by shell.
pub fn write_trajectories(dir: &Path, trajectories: &[Trajectory]) -> Result<()> {
    let header: Vec<String> = TRAJECTORY_HEADER.iter().map(|s| s.to_string()).collect();
    write_table(
        &dir.join(TRAJECTORIES_FILE),
        &header,
        trajectories.iter().flat_map(|tr| {
            let id = tr.particle_index as f64;
            tr.times
                .iter()
                .zip(&tr.states)
                .zip(&tr.m_at)
                .map(move |((&t, s), &m)| vec![id, t, s.r, s.w, s.ell, m])
        }),
    )
}

fn regroup(ids: &[f64], times: &[f64], states: &[RadialPoint], ms: &[f64]) -> Vec<Trajectory> {
    let mut out: Vec<Trajectory> = Vec::new();
    for i in 0..ids.len() {
        let id = ids[i] as usize;
        let fresh = match out.last() {
            Some(tr) => tr.particle_index != id || times[i] <= *tr.times.last().unwrap(),
            None => true,
        };
        if fresh {
            out.push(Trajectory::new(id, states[i], times[i]));
        }
        out.last_mut().unwrap().push_sample(times[i], states[i], ms[i]);
    }
    out
}

pub fn read_trajectories(dir: &Path) -> Result<Vec<Trajectory>> {
    let t = read_table(&dir.join(TRAJECTORIES_FILE))?;
    if t.header != TRAJECTORY_HEADER {
        bail!(
            "trajectories.csv: expected columns {}, found {}",
            TRAJECTORY_HEADER.join(","),
            t.header.join(",")
        );
    }
    let states: Vec<RadialPoint> = (0..t.rows())
        .map(|i| RadialPoint {
            r: t.columns[2][i],
            w: t.columns[3][i],
            ell: t.columns[4][i],
        })
        .collect();
    Ok(regroup(&t.columns[0], &t.columns[1], &states, &t.columns[5]))
}

const GHOST_HEADER: [&str; 7] = ["pair", "member", "time", "r", "w", "ell", "m_at_r"];

/// Write the ghost-pair histories; `pair` is the index of the shell the
/// probes were launched from, `member` 0 the unbumped copy, 1 the
/// momentum-bumped one.
pub fn write_ghosts(dir: &Path, ghosts: &[GhostPair]) -> Result<()> {
    let header: Vec<String> = GHOST_HEADER.iter().map(|s| s.to_string()).collect();
    write_table(
        &dir.join(GHOSTS_FILE),
        &header,
        ghosts.iter().flat_map(|g| {
            let pair = g.base.particle_index as f64;
            [(0.0, &g.base), (1.0, &g.bumped)].into_iter().flat_map(move |(member, tr)| {
                tr.times
                    .iter()
                    .zip(&tr.states)
                    .zip(&tr.m_at)
                    .map(move |((&t, s), &m)| {
                        vec![pair, member, t, s.r, s.w, s.ell, m]
                    })
                    .collect::<Vec<_>>()
            })
        }),
    )
}

/// Read the ghost pairs back; `delta_w` comes from the run configuration.
/// Launch time and state are reconstructed from the first recorded sample.
pub fn read_ghosts(dir: &Path, delta_w: f64) -> Result<Vec<GhostPair>> {
    let t = read_table(&dir.join(GHOSTS_FILE))?;
    if t.header != GHOST_HEADER {
        bail!(
            "ghosts.csv: expected columns {}, found {}",
            GHOST_HEADER.join(","),
            t.header.join(",")
        );
    }
    let n = t.rows();
    let states: Vec<RadialPoint> = (0..n)
        .map(|i| RadialPoint {
            r: t.columns[3][i],
            w: t.columns[4][i],
            ell: t.columns[5][i],
        })
        .collect();
    // Split rows by member, keep the pair id as the grouping key.
    let mut base_rows = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut bump_rows = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let bucket = match t.columns[1][i] as u8 {
            0 => &mut base_rows,
            1 => &mut bump_rows,
            other => bail!("ghosts.csv: member must be 0 or 1, found {other}"),
        };
        bucket.0.push(t.columns[0][i]);
        bucket.1.push(t.columns[2][i]);
        bucket.2.push(states[i]);
        bucket.3.push(t.columns[6][i]);
    }
    let base = regroup(&base_rows.0, &base_rows.1, &base_rows.2, &base_rows.3);
    let bumped = regroup(&bump_rows.0, &bump_rows.1, &bump_rows.2, &bump_rows.3);
    if base.len() != bumped.len() {
        bail!(
            "ghosts.csv: {} unbumped histories against {} bumped",
            base.len(),
            bumped.len()
        );
    }
    Ok(base
        .into_iter()
        .zip(bumped)
        .map(|(base, bumped)| GhostPair { base, bumped, delta_w })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vlasov_core::diagnostics::CasimirFn;

    fn spec() -> DiagnosticSpec {
        DiagnosticSpec::default()
    }

    #[test]
    fn header_follows_the_fixed_column_order() {
        let mut s = spec();
        s.rho_exponents = vec![
            Exponent::Finite(1.0),
            Exponent::Finite(1.2),
            Exponent::Finite(2.0),
            Exponent::Inf,
        ];
        s.casimirs = vec![CasimirFn::Identity, CasimirFn::Square];
        assert_eq!(
            diagnostics_header(&s),
            vec![
                "time", "mass", "energy", "casimir_identity", "casimir_square", "E_p2", "E_p3",
                "E_inf", "rho_q1", "rho_q1_2", "rho_q2", "rho_inf", "R_sup", "W_sup", "speed_sup",
                "clamp_events",
            ]
        );
    }

    #[test]
    fn tables_round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let header = vec!["a".to_string(), "b".to_string()];
        let rows = vec![
            vec![0.1 + 0.2, -1.0 / 3.0],
            vec![1e-308, 6.02214076e23],
            vec![f64::INFINITY, 2.0f64.sqrt()],
        ];
        write_table(&path, &header, rows.clone().into_iter()).unwrap();
        let t = read_table(&path).unwrap();
        assert_eq!(t.header, header);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(t.columns[j][i].to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn snapshot_round_trip_preserves_every_shell() {
        let dir = tempfile::tempdir().unwrap();
        let e = Ensemble::new(
            Model::Relativistic,
            2.5,
            vec![
                Particle { state: RadialPoint { r: 1.0, w: 0.25, ell: 0.5 }, weight: 0.125 },
                Particle { state: RadialPoint { r: 2.0, w: -0.5, ell: 1.5 }, weight: 0.875 },
            ],
        );
        write_snapshot(dir.path(), 2.5, &e).unwrap();
        let all = read_snapshots(dir.path(), Model::Relativistic).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].0, 2.5);
        assert_eq!(all[0].1, e);
    }

    #[test]
    fn snapshots_come_back_in_time_order() {
        let dir = tempfile::tempdir().unwrap();
        let e = Ensemble::new(
            Model::Classical,
            0.0,
            vec![Particle { state: RadialPoint { r: 1.0, w: 0.0, ell: 1.0 }, weight: 1.0 }],
        );
        for t in [10.0, 2.0, 0.0, 100.0] {
            write_snapshot(dir.path(), t, &e).unwrap();
        }
        let times: Vec<f64> = read_snapshots(dir.path(), Model::Classical)
            .unwrap()
            .iter()
            .map(|(t, _)| *t)
            .collect();
        assert_eq!(times, vec![0.0, 2.0, 10.0, 100.0]);
    }

    #[test]
    fn trajectories_round_trip_with_grouping() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Trajectory::new(3, RadialPoint { r: 1.0, w: 0.5, ell: 1.0 }, 0.0);
        let mut b = Trajectory::new(7, RadialPoint { r: 2.0, w: -0.5, ell: 0.5 }, 0.0);
        for k in 0..4 {
            let t = k as f64 * 0.5;
            a.push_sample(t, RadialPoint { r: 1.0 + t, w: 0.5, ell: 1.0 }, 0.25 * t);
            b.push_sample(t, RadialPoint { r: 2.0 + t, w: -0.5, ell: 0.5 }, 0.125 * t);
        }
        write_trajectories(dir.path(), &[a.clone(), b.clone()]).unwrap();
        let back = read_trajectories(dir.path()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn ghost_pairs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        // Like the runner, the first recorded sample carries the launch state.
        let mk = |r0: f64, w0: f64| {
            let mut tr = Trajectory::new(1, RadialPoint { r: r0, w: w0, ell: 1.0 }, 5.0);
            for k in 0..3 {
                let t = 5.0 + k as f64;
                tr.push_sample(t, RadialPoint { r: r0 + (t - 5.0), w: w0, ell: 1.0 }, 0.5);
            }
            tr
        };
        let pair = GhostPair {
            base: mk(1.0, 0.25),
            bumped: mk(1.0, 0.25 + 1e-4),
            delta_w: 1e-4,
        };
        write_ghosts(dir.path(), &[pair.clone()]).unwrap();
        let back = read_ghosts(dir.path(), 1e-4).unwrap();
        assert_eq!(back, vec![pair]);
    }
}
