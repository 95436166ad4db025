use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use eikon::analysis::{format_float, write_csv};
use eikon::{kruzkov_inverse, MinimizerConfig, ValueField};
use serde::Serialize;

use crate::Failure;

/// Version of every JSON document written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to repeat a run.
#[derive(Serialize, Debug)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub benchmark: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_steps: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub minimizer: MinimizerConfig,
    pub outputs: Vec<PathBuf>,
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root)
            .map_err(|e| Failure::Config(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.root.join(name);
        let file = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value)
            .map_err(|e| Failure::Runtime(format!("cannot serialise {name}: {e}")))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn with<F>(&mut self, name: &str, write: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let mut w = self.open(name)?;
        write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `manifest.json`, listing every file written so far.
    pub fn finish(mut self, mut manifest: RunManifest) -> Result<(), Failure> {
        manifest.outputs = self.written.clone();
        manifest.outputs.push(self.root.join("manifest.json"));
        self.json("manifest.json", &manifest)
    }
}

/// Per node: axis indices, coordinates, `v`, `T` and the label.
pub fn write_values_csv<W: Write>(out: &mut W, field: &ValueField) -> std::io::Result<()> {
    let grid = field.grid();
    let dim = grid.dim();
    let mut header: Vec<String> = (0..dim).map(|l| format!("i{l}")).collect();
    header.extend((0..dim).map(|l| format!("x{l}")));
    header.extend(["v", "T", "label"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = grid.nodes().map(|x| {
        let v = field.value(x);
        let t = kruzkov_inverse(v).unwrap_or(f64::NAN);
        let mut row: Vec<String> = grid.multi_index(x).iter().map(|i| i.to_string()).collect();
        row.extend(grid.coord(x).into_iter().map(format_float));
        row.push(format_float(v));
        row.push(format_float(t));
        row.push(field.label(x).as_str().to_string());
        row
    });
    write_csv(out, &header, rows)
}
