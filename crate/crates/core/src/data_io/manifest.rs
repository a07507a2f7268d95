//! JSON manifest + CSV recording layout.
//!
//! ```json
//! { "recordings": [
//!     { "subject_id": "S1", "study_id": "Study1", "sample_rate_hz": 90.0,
//!       "sensors": ["S1_torso.csv", "S1_left.csv", "S1_right.csv"],
//!       "annotations": "S1_annotations.csv" } ] }
//! ```
//!
//! Relative paths resolve against the manifest's directory. Sensor CSVs have
//! the header `t,x,y,z`; annotation CSVs have `start,end,label` with sample
//! indices and `SMM`/`NoSMM` labels.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::recording::{Annotation, Label, RawRecording, SensorStream, StudyId};
use crate::error::{Error, Result};

pub const SENSOR_NAMES: [&str; 3] = ["torso", "left", "right"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub recordings: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub study_id: StudyId,
    pub sample_rate_hz: f64,
    pub sensors: Vec<PathBuf>,
    pub annotations: PathBuf,
}

pub fn load_recordings(manifest_path: &Path) -> Result<Vec<RawRecording>> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        what: "manifest",
        path: manifest_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    manifest
        .recordings
        .iter()
        .map(|entry| load_entry(base, entry))
        .collect()
}

fn load_entry(base: &Path, entry: &ManifestEntry) -> Result<RawRecording> {
    let sensors = entry
        .sensors
        .iter()
        .map(|p| read_sensor_csv(&base.join(p)))
        .collect::<Result<Vec<_>>>()?;
    let annotations = read_annotation_csv(&base.join(&entry.annotations))?;
    RawRecording::new(
        entry.subject_id.clone(),
        entry.study_id,
        entry.sample_rate_hz,
        sensors,
        annotations,
    )
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            what: "CSV header",
            path: path.to_path_buf(),
            message: format!(
                "expected `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(reader)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::io(path, io);
        }
        unreachable!()
    }
    Error::Parse {
        what: "CSV",
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn parse_field<T: std::str::FromStr>(path: &Path, row: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        what: "CSV field",
        path: path.to_path_buf(),
        message: format!("row {row}: cannot parse {name} from `{raw}`"),
    })
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn read_sensor_csv(path: &Path) -> Result<SensorStream> {
    let mut reader = open_csv(path, &["t", "x", "y", "z"])?;
    let mut samples = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let t: f64 = parse_field(path, row, "t", &record[0])?;
        if !(t > last_t) {
            return Err(Error::Parse {
                what: "sensor CSV",
                path: path.to_path_buf(),
                message: format!("row {row}: time {t} is not increasing"),
            });
        }
        last_t = t;
        let mut xyz = [0.0; 3];
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            xyz[axis] = parse_field(path, row, name, &record[axis + 1])?;
        }
        samples.push(xyz);
    }
    Ok(samples)
}

pub fn read_annotation_csv(path: &Path) -> Result<Vec<Annotation>> {
    let mut reader = open_csv(path, &["start", "end", "label"])?;
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let start = parse_field(path, row, "start", &record[0])?;
        let end = parse_field(path, row, "end", &record[1])?;
        let label = Label::parse(&record[2]).ok_or_else(|| Error::Parse {
            what: "annotation CSV",
            path: path.to_path_buf(),
            message: format!("row {row}: unknown label `{}`", &record[2]),
        })?;
        out.push(Annotation { start, end, label });
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Write recordings as a manifest plus CSV files into `dir`.
/// Returns the manifest path.
pub fn write_dataset(recordings: &[RawRecording], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(recordings.len());
    for rec in recordings {
        let stem = format!("{}_{}", rec.study_id, rec.subject_id);
        let mut sensor_paths = Vec::with_capacity(rec.n_sensors());
        for (i, sensor) in rec.sensors().iter().enumerate() {
            let name = SENSOR_NAMES
                .get(i)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("sensor{i}"));
            let file = PathBuf::from(format!("{stem}_{name}.csv"));
            let mut body = String::from("t,x,y,z\n");
            for (t, s) in sensor.iter().enumerate() {
                let time = t as f64 / rec.sample_rate_hz;
                body.push_str(&format!("{time},{},{},{}\n", s[0], s[1], s[2]));
            }
            write_file(&dir.join(&file), &body)?;
            sensor_paths.push(file);
        }
        let ann_file = PathBuf::from(format!("{stem}_annotations.csv"));
        let mut body = String::from("start,end,label\n");
        for a in rec.annotations() {
            body.push_str(&format!("{},{},{}\n", a.start, a.end, a.label.as_str()));
        }
        write_file(&dir.join(&ann_file), &body)?;
        entries.push(ManifestEntry {
            subject_id: rec.subject_id.clone(),
            study_id: rec.study_id,
            sample_rate_hz: rec.sample_rate_hz,
            sensors: sensor_paths,
            annotations: ann_file,
        });
    }
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&Manifest {
        recordings: entries,
    })
    .expect("manifest serialization");
    write_file(&manifest_path, &(json + "\n"))?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn sensor_body(n: usize) -> String {
        let mut s = String::from("t,x,y,z\n");
        for i in 0..n {
            s.push_str(&format!("{},{},0,1\n", i as f64 / 90.0, i));
        }
        s
    }

    fn manifest(dir: &Path, sensors: &[&str], ann: &str) -> PathBuf {
        let m = Manifest {
            recordings: vec![ManifestEntry {
                subject_id: "S1".into(),
                study_id: StudyId::Study2,
                sample_rate_hz: 90.0,
                sensors: sensors.iter().map(PathBuf::from).collect(),
                annotations: ann.into(),
            }],
        };
        let p = dir.join("m.json");
        fs::write(&p, serde_json::to_string(&m).unwrap()).unwrap();
        p
    }

    #[test]
    fn loads_single_sensor_recording() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", &sensor_body(900));
        write(dir.path(), "ann.csv", "start,end,label\n0,450,SMM\n");
        let recs = load_recordings(&manifest(dir.path(), &["a.csv"], "ann.csv")).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].n_samples(), 900);
        assert_eq!(
            recs[0].annotations(),
            &[Annotation {
                start: 0,
                end: 450,
                label: Label::Smm
            }]
        );
        assert_eq!(recs[0].sensors()[0][7], [7.0, 0.0, 1.0]);
    }

    #[test]
    fn sensor_length_mismatch_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", &sensor_body(900));
        write(dir.path(), "b.csv", &sensor_body(899));
        write(dir.path(), "ann.csv", "start,end,label\n");
        let err =
            load_recordings(&manifest(dir.path(), &["a.csv", "b.csv"], "ann.csv")).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("length mismatch"));
        assert!(err.to_string().contains("S1"));
    }

    #[test]
    fn overlapping_annotations_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", &sensor_body(900));
        write(
            dir.path(),
            "ann.csv",
            "start,end,label\n0,100,SMM\n50,150,SMM\n",
        );
        let err = load_recordings(&manifest(dir.path(), &["a.csv"], "ann.csv")).unwrap_err();
        assert!(err.to_string().contains("overlapping intervals"), "{err}");
    }

    #[test]
    fn missing_file_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "ann.csv", "start,end,label\n");
        let err = load_recordings(&manifest(dir.path(), &["nope.csv"], "ann.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("nope.csv"));
    }

    #[test]
    fn ragged_or_garbage_rows_are_errors_not_skipped() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "ann.csv", "start,end,label\n");
        write(dir.path(), "a.csv", "t,x,y,z\n0,1,2,3\n0.1,1,2\n");
        assert!(load_recordings(&manifest(dir.path(), &["a.csv"], "ann.csv")).is_err());
        write(dir.path(), "a.csv", "t,x,y,z\n0,1,2,3\n0.1,1,abc,3\n");
        assert!(load_recordings(&manifest(dir.path(), &["a.csv"], "ann.csv")).is_err());
        write(dir.path(), "a.csv", "t,x,y,z\n0,1,2,3\n0,1,2,3\n");
        assert!(load_recordings(&manifest(dir.path(), &["a.csv"], "ann.csv")).is_err());
        write(dir.path(), "a.csv", "time,x,y,z\n0,1,2,3\n");
        assert!(load_recordings(&manifest(dir.path(), &["a.csv"], "ann.csv")).is_err());
    }
}
