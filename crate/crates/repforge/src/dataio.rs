//! Raw recording ingestion: set identifiers, CSV schemas, and the rep-wise
//! dataset sink.
//!
//! On-disk formats:
//! - EMG CSV: columns `t_s` (optional) and `emg_mv`.
//! - IMU CSV: columns `t_s` (optional), `ax_g, ay_g, az_g, gx_dps, gy_dps, gz_dps`.
//! - RPE CSV: one row per set, `set_id, rpe_1, rpe_2, ...`; ragged rows and
//!   trailing blanks are permitted.
//! - Column-map config: flat key-value file mapping the logical column names
//!   above to whatever the source export uses, and declaring nominal rates
//!   and the palm axis. When a timestamp column is absent, timestamps are
//!   synthesized from the declared nominal rate.

use std::path::Path;

use crate::config::KvConfig;
use crate::csvio::{self, fmt_f64, parse_f64, TableWriter};
use crate::error::{Error, Result};

pub const NOMINAL_EMG_HZ: f64 = 2148.1;
pub const NOMINAL_IMU_HZ: f64 = 370.4;

/// Identity of one recorded exercise set, `userID_weight_setnum`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetId {
    pub user_id: String,
    pub weight_kg: u32,
    pub set_num: u32,
}

impl SetId {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split('_').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!(
                "set id {text:?}: expected 3 underscore-delimited fields, got {}",
                parts.len()
            )));
        }
        let user_id = parts[0].to_string();
        if user_id.is_empty() {
            return Err(Error::Parse(format!("set id {text:?}: empty user id")));
        }
        let weight_kg: u32 = parts[1]
            .parse()
            .map_err(|_| Error::Parse(format!("set id {text:?}: non-numeric weight")))?;
        let set_num: u32 = parts[2]
            .parse()
            .map_err(|_| Error::Parse(format!("set id {text:?}: non-numeric set number")))?;
        if weight_kg == 0 {
            return Err(Error::Parse(format!("set id {text:?}: weight must be positive")));
        }
        if set_num == 0 {
            return Err(Error::Parse(format!("set id {text:?}: set number must be ≥ 1")));
        }
        Ok(SetId {
            user_id,
            weight_kg,
            set_num,
        })
    }
}

impl std::fmt::Display for SetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}_{}_{}", self.user_id, self.weight_kg, self.set_num)
    }
}

/// Which IMU axis points outward from the palm, and its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PalmAxisConfig {
    pub axis_index: usize,
    pub sign: i8,
}

impl Default for PalmAxisConfig {
    fn default() -> Self {
        PalmAxisConfig {
            axis_index: 0,
            sign: 1,
        }
    }
}

impl PalmAxisConfig {
    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        let axis_index = match cfg.get_or("palm.axis", "x") {
            "x" | "0" => 0,
            "y" | "1" => 1,
            "z" | "2" => 2,
            other => {
                return Err(Error::Config(format!(
                    "palm.axis: expected x|y|z, got {other:?}"
                )))
            }
        };
        let sign = match cfg.get_or("palm.sign", "+1") {
            "+1" | "1" | "+" => 1,
            "-1" | "-" => -1,
            other => {
                return Err(Error::Config(format!(
                    "palm.sign: expected +1|-1, got {other:?}"
                )))
            }
        };
        Ok(PalmAxisConfig { axis_index, sign })
    }
}

/// Scalar series with timestamps in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
}

/// 3-axis series sharing one timestamp vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TriSeries {
    pub t: Vec<f64>,
    pub axes: [Vec<f64>; 3],
}

/// One recorded exercise set before any processing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSet {
    pub set_id: SetId,
    pub emg: Series,
    pub accel: TriSeries,
    pub gyro: TriSeries,
    pub rpe_annotations: Vec<u8>,
}

impl RawSet {
    pub fn validate(&self) -> Result<()> {
        check_monotonic(&self.emg.t, "emg")?;
        check_monotonic(&self.accel.t, "imu")?;
        if self.emg.t.len() != self.emg.v.len() {
            return Err(Error::Data("emg: timestamp/value length mismatch".into()));
        }
        for axis in self.accel.axes.iter().chain(self.gyro.axes.iter()) {
            if axis.len() != self.accel.t.len() {
                return Err(Error::Data("imu: channel length mismatch".into()));
            }
        }
        if self.gyro.t != self.accel.t {
            return Err(Error::Data("gyro timestamps differ from accel".into()));
        }
        for &rpe in &self.rpe_annotations {
            if !(1..=10).contains(&rpe) {
                return Err(Error::Data(format!(
                    "{}: RPE {rpe} out of range [1,10]",
                    self.set_id
                )));
            }
        }
        if self.rpe_annotations.is_empty() {
            return Err(Error::Data(format!("{}: no RPE annotations", self.set_id)));
        }
        Ok(())
    }
}

fn check_monotonic(t: &[f64], what: &str) -> Result<()> {
    if t.is_empty() {
        return Err(Error::Data(format!("{what}: empty series")));
    }
    for w in t.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Data(format!(
                "{what}: non-monotonic timestamps at t={}",
                w[1]
            )));
        }
    }
    Ok(())
}

fn logical_column<'a>(cfg: &'a KvConfig, logical: &'a str) -> &'a str {
    // columns.<logical> remaps a source column name; default is the logical name.
    cfg.get(&format!("columns.{logical}")).unwrap_or(logical)
}

fn read_channel(
    table: &csvio::Table,
    cfg: &KvConfig,
    logical: &str,
    path: &Path,
) -> Result<Vec<f64>> {
    let name = logical_column(cfg, logical);
    let idx = table.column(name).ok_or_else(|| {
        Error::Parse(format!("{}: missing column {name:?}", path.display()))
    })?;
    table
        .rows
        .iter()
        .map(|row| {
            let field = row.get(idx).map(String::as_str).unwrap_or("");
            parse_f64(field, &format!("{} column {name}", path.display()))
        })
        .collect()
}

fn read_timestamps(
    table: &csvio::Table,
    cfg: &KvConfig,
    path: &Path,
    nominal_hz: f64,
) -> Result<Vec<f64>> {
    let name = logical_column(cfg, "t_s");
    match table.column(name) {
        Some(idx) => table
            .rows
            .iter()
            .map(|row| {
                let field = row.get(idx).map(String::as_str).unwrap_or("");
                parse_f64(field, &format!("{} column {name}", path.display()))
            })
            .collect(),
        None => Ok((0..table.rows.len())
            .map(|i| i as f64 / nominal_hz)
            .collect()),
    }
}

/// Load one set from its EMG CSV, IMU CSV, and the shared RPE table.
pub fn load_set(
    emg_path: &Path,
    imu_path: &Path,
    rpe_table_path: &Path,
    set_id: &SetId,
    cfg: &KvConfig,
) -> Result<RawSet> {
    let emg_hz = cfg.get_f64_or("rate.emg_hz", NOMINAL_EMG_HZ)?;
    let imu_hz = cfg.get_f64_or("rate.imu_hz", NOMINAL_IMU_HZ)?;

    let emg_table = csvio::read_table(emg_path)?;
    let emg = Series {
        t: read_timestamps(&emg_table, cfg, emg_path, emg_hz)?,
        v: read_channel(&emg_table, cfg, "emg_mv", emg_path)?,
    };

    let imu_table = csvio::read_table(imu_path)?;
    let t = read_timestamps(&imu_table, cfg, imu_path, imu_hz)?;
    let accel = TriSeries {
        t: t.clone(),
        axes: [
            read_channel(&imu_table, cfg, "ax_g", imu_path)?,
            read_channel(&imu_table, cfg, "ay_g", imu_path)?,
            read_channel(&imu_table, cfg, "az_g", imu_path)?,
        ],
    };
    let gyro = TriSeries {
        t,
        axes: [
            read_channel(&imu_table, cfg, "gx_dps", imu_path)?,
            read_channel(&imu_table, cfg, "gy_dps", imu_path)?,
            read_channel(&imu_table, cfg, "gz_dps", imu_path)?,
        ],
    };

    let rpe_annotations = load_rpe_annotations(rpe_table_path, set_id)?;
    let set = RawSet {
        set_id: set_id.clone(),
        emg,
        accel,
        gyro,
        rpe_annotations,
    };
    set.validate()?;
    Ok(set)
}

/// Read the per-rep RPE annotations for one set from the RPE table.
pub fn load_rpe_annotations(path: &Path, set_id: &SetId) -> Result<Vec<u8>> {
    let table = csvio::read_table(path)?;
    let key = set_id.to_string();
    for row in &table.rows {
        if row.first().map(String::as_str) != Some(key.as_str()) {
            continue;
        }
        let mut rpes = Vec::new();
        for field in &row[1..] {
            if field.is_empty() {
                continue; // trailing blanks from ragged spreadsheet rows
            }
            let value: i64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("{key}: non-integer RPE {field:?}")))?;
            if !(1..=10).contains(&value) {
                return Err(Error::Data(format!("{key}: RPE {value} out of range [1,10]")));
            }
            rpes.push(value as u8);
        }
        if rpes.is_empty() {
            return Err(Error::Data(format!("{key}: row has no RPE values")));
        }
        return Ok(rpes);
    }
    Err(Error::Data(format!(
        "set {key} not found in RPE table {}",
        path.display()
    )))
}

/// All set ids present in an RPE table, in file order.
pub fn list_annotated_sets(path: &Path) -> Result<Vec<SetId>> {
    let table = csvio::read_table(path)?;
    table
        .rows
        .iter()
        .filter(|row| !row.is_empty() && !row[0].is_empty())
        .map(|row| SetId::parse(&row[0]))
        .collect()
}

/// One row of the rep-wise dataset: a repetition with its feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRow {
    pub rep_id: String,
    pub set_id: String,
    pub rpe: u8,
    pub values: Vec<f64>,
}

/// Write the rep-wise dataset CSV. Columns: `rep_id, set_id, rpe`, then one
/// column per feature in `feature_names` order.
pub fn write_rep_dataset(
    path: &Path,
    schema_version: &str,
    feature_names: &[&str],
    rows: &[RepRow],
    provenance: &[String],
) -> Result<()> {
    for row in rows {
        if row.values.len() != feature_names.len() {
            return Err(Error::Data(format!(
                "{}: {} values for {} feature columns",
                row.rep_id,
                row.values.len(),
                feature_names.len()
            )));
        }
    }
    // Provenance leads so every artifact opens with config_hash and seed
    let mut comments = provenance.to_vec();
    comments.push(format!("schema_version={schema_version}"));
    let mut header = vec!["rep_id", "set_id", "rpe"];
    header.extend_from_slice(feature_names);
    let mut w = TableWriter::create(path, &comments, &header)?;
    for row in rows {
        let mut fields = vec![row.rep_id.clone(), row.set_id.clone(), row.rpe.to_string()];
        fields.extend(row.values.iter().map(|v| fmt_f64(*v)));
        w.write_row(&fields)?;
    }
    w.finish()
}

/// Reload a rep-wise dataset written by [`write_rep_dataset`].
pub fn read_rep_dataset(path: &Path) -> Result<(String, Vec<String>, Vec<RepRow>)> {
    let table = csvio::read_table(path)?;
    let schema_version = table
        .comments
        .iter()
        .find_map(|c| c.strip_prefix("schema_version="))
        .unwrap_or("unknown")
        .to_string();
    if table.header.len() < 3 || table.header[..3] != ["rep_id", "set_id", "rpe"] {
        return Err(Error::Parse(format!(
            "{}: expected header rep_id,set_id,rpe,...",
            path.display()
        )));
    }
    let feature_names: Vec<String> = table.header[3..].to_vec();
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        if row.len() != table.header.len() {
            return Err(Error::Parse(format!(
                "{}: row width {} != header width {}",
                path.display(),
                row.len(),
                table.header.len()
            )));
        }
        let rpe: u8 = row[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad rpe field {:?}", row[2])))?;
        let values = row[3..]
            .iter()
            .map(|f| parse_f64(f, "feature value"))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(RepRow {
            rep_id: row[0].clone(),
            set_id: row[1].clone(),
            rpe,
            values,
        });
    }
    Ok((schema_version, feature_names, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_id_round_trip() {
        let id = SetId::parse("A321_15_9").unwrap();
        assert_eq!(
            id,
            SetId {
                user_id: "A321".into(),
                weight_kg: 15,
                set_num: 9
            }
        );
        assert_eq!(id.to_string(), "A321_15_9");

        let minimal = SetId::parse("X000_5_1").unwrap();
        assert_eq!(minimal.to_string(), "X000_5_1");
    }

    #[test]
    fn set_id_rejects_malformed() {
        assert!(SetId::parse("A321_15").is_err());
        assert!(SetId::parse("A321_15_9_2").is_err());
        assert!(SetId::parse("A321_heavy_9").is_err());
        assert!(SetId::parse("_15_9").is_err());
        assert!(SetId::parse("A321_15_0").is_err());
    }

    #[test]
    fn rpe_table_join_and_bounds() {
        let dir = std::env::temp_dir().join(format!("repforge-dataio-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rpe.csv");
        std::fs::write(&path, "set_id,rpe_1,rpe_2,rpe_3\nA321_15_9,3,4,\nB111_10_1,5,11,\n")
            .unwrap();

        let rpes = load_rpe_annotations(&path, &SetId::parse("A321_15_9").unwrap()).unwrap();
        assert_eq!(rpes, vec![3, 4]);

        let err = load_rpe_annotations(&path, &SetId::parse("B111_10_1").unwrap());
        assert!(err.is_err(), "RPE 11 must be rejected");

        let missing = load_rpe_annotations(&path, &SetId::parse("Z999_5_1").unwrap());
        assert!(missing.is_err(), "unannotated set must be rejected");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rep_dataset_round_trip() {
        let dir = std::env::temp_dir().join(format!("repforge-repds-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("reps.csv");
        let rows = vec![
            RepRow {
                rep_id: "A321_15_9_1".into(),
                set_id: "A321_15_9".into(),
                rpe: 3,
                values: vec![1.0 / 3.0, -2.5],
            },
            RepRow {
                rep_id: "A321_15_9_2".into(),
                set_id: "A321_15_9".into(),
                rpe: 4,
                values: vec![0.125, 7.0],
            },
        ];
        write_rep_dataset(&path, "v1", &["f_a", "f_b"], &rows, &[]).unwrap();
        let (schema, names, reloaded) = read_rep_dataset(&path).unwrap();
        assert_eq!(schema, "v1");
        assert_eq!(names, vec!["f_a", "f_b"]);
        assert_eq!(reloaded.len(), rows.len());
        for (a, b) in rows.iter().zip(&reloaded) {
            assert_eq!(a.rep_id, b.rep_id);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-9);
            }
        }

        // zero rows → header-only file
        write_rep_dataset(&path, "v1", &["f_a"], &[], &[]).unwrap();
        let (_, names, reloaded) = read_rep_dataset(&path).unwrap();
        assert_eq!(names, vec!["f_a"]);
        assert!(reloaded.is_empty());

        // schema mismatch across rows
        let bad = vec![RepRow {
            rep_id: "r".into(),
            set_id: "s".into(),
            rpe: 1,
            values: vec![1.0, 2.0, 3.0],
        }];
        assert!(write_rep_dataset(&path, "v1", &["f_a"], &bad, &[]).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
