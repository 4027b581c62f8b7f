//! Synthetic welding tables with planted, learnable structure.
//!
//! Spots come in contiguous carbody blocks that share a machine and a
//! program. Each spot draws a current level; the level shifts all three
//! current stages and fixes the diameter class, so the diameter depends on a
//! literal feature and not on machine or program.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{write_schema, Cell, ColumnKind, ColumnSpec, TableDataset};

/// Lower edge of diameter class 0, in mm. A multiple of [`DIAMETER_STEP`].
pub const DIAMETER_BASE: f64 = 4.0;
/// Width of one diameter class, in mm.
pub const DIAMETER_STEP: f64 = 0.5;

pub const DATA_FILE: &str = "data.csv";
pub const SCHEMA_FILE: &str = "schema.txt";
pub const MAPPING_FILE: &str = "mapping.txt";
pub const TRUTH_FILE: &str = "ground_truth.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_machines: usize,
    pub n_programs: usize,
    pub n_carbodies: usize,
    pub n_components: usize,
    pub n_diameter_classes: usize,
    /// Probability that a spot's diameter class is replaced by another class.
    pub noise_rate: f64,
    pub seed: u64,
    pub series_len: usize,
    /// Current of level 0 in stage 0, kA.
    pub current_base: f64,
    /// Current increase per level, kA.
    pub current_step: f64,
    /// Offset between consecutive stage means, kA.
    pub stage_separation: f64,
    /// Standard deviation of per-sample sensor noise.
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_rows: 2000,
            n_machines: 18,
            n_programs: 181,
            n_carbodies: 613,
            n_components: 12,
            n_diameter_classes: 5,
            noise_rate: 0.0,
            seed: 0,
            series_len: 12,
            current_base: 8.0,
            current_step: 1.0,
            stage_separation: 0.6,
            jitter: 0.05,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_diameter_classes < 2 {
            return Err(Error::InvalidArgument("n_diameter_classes must be at least 2".into()));
        }
        let counts = [
            ("n_rows", self.n_rows),
            ("n_machines", self.n_machines),
            ("n_programs", self.n_programs),
            ("n_carbodies", self.n_carbodies),
            ("n_components", self.n_components),
            ("series_len", self.series_len),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.n_carbodies > self.n_rows {
            return Err(Error::InvalidArgument("n_carbodies cannot exceed n_rows".into()));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::InvalidArgument(format!("noise_rate must be in [0, 1), got {}", self.noise_rate)));
        }
        for (name, v) in [("current_step", self.current_step), ("jitter", self.jitter)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.current_base.is_finite() && self.stage_separation.is_finite() && self.stage_separation >= 0.0) {
            return Err(Error::InvalidArgument("current_base and stage_separation must be finite".into()));
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut c = SynthConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::parse(file, i + 1, msg);
            let (key, value) = line.split_once('=').ok_or_else(|| perr("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("bad value {v:?}"))
            }
            let r: std::result::Result<(), String> = (|| {
                match key {
                    "n_rows" => c.n_rows = num(value)?,
                    "n_machines" => c.n_machines = num(value)?,
                    "n_programs" => c.n_programs = num(value)?,
                    "n_carbodies" => c.n_carbodies = num(value)?,
                    "n_components" => c.n_components = num(value)?,
                    "n_diameter_classes" => c.n_diameter_classes = num(value)?,
                    "noise_rate" => c.noise_rate = num(value)?,
                    "seed" => c.seed = num(value)?,
                    "series_len" => c.series_len = num(value)?,
                    "current_base" => c.current_base = num(value)?,
                    "current_step" => c.current_step = num(value)?,
                    "stage_separation" => c.stage_separation = num(value)?,
                    "jitter" => c.jitter = num(value)?,
                    other => return Err(format!("unknown key {other:?}")),
                }
                Ok(())
            })();
            r.map_err(perr)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Average stage index over one series.
    fn mean_stage(&self) -> f64 {
        let l = self.series_len;
        (0..l).map(|j| (j * 3 / l) as f64).sum::<f64>() / l as f64
    }

    /// Diameter class planted for a (machine, program, mean current) context.
    pub fn planted_class(&self, _machine: usize, _program: usize, current_mean: f64) -> usize {
        let x = (current_mean - self.current_base - self.mean_stage() * self.stage_separation) / self.current_step;
        (x.floor().max(0.0) as usize).min(self.n_diameter_classes - 1)
    }
}

impl fmt::Display for SynthConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_rows = {}", self.n_rows)?;
        writeln!(f, "n_machines = {}", self.n_machines)?;
        writeln!(f, "n_programs = {}", self.n_programs)?;
        writeln!(f, "n_carbodies = {}", self.n_carbodies)?;
        writeln!(f, "n_components = {}", self.n_components)?;
        writeln!(f, "n_diameter_classes = {}", self.n_diameter_classes)?;
        writeln!(f, "noise_rate = {}", self.noise_rate)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "series_len = {}", self.series_len)?;
        writeln!(f, "current_base = {}", self.current_base)?;
        writeln!(f, "current_step = {}", self.current_step)?;
        writeln!(f, "stage_separation = {}", self.stage_separation)?;
        writeln!(f, "jitter = {}", self.jitter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub spot: String,
    pub machine: usize,
    pub program: usize,
    pub current_mean: f64,
    /// Class given by the planted function, before noise.
    pub planted_class: usize,
    /// Class actually written to the table.
    pub diameter_class: usize,
    pub carbody: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub config: SynthConfig,
    pub table: TableDataset,
    pub truth: Vec<TruthRow>,
}

pub fn columns() -> Vec<ColumnSpec> {
    vec![
        ColumnSpec::new("spot_id", ColumnKind::RowId),
        ColumnSpec::new("machine", ColumnKind::Categorical),
        ColumnSpec::new("program", ColumnKind::Categorical),
        ColumnSpec::new("component", ColumnKind::Categorical),
        ColumnSpec::new("status", ColumnKind::Categorical),
        ColumnSpec::new("remark", ColumnKind::Categorical),
        ColumnSpec::new("timestamp", ColumnKind::Numeric).with_unit("s"),
        ColumnSpec::new("current", ColumnKind::SensorSeries).with_unit("kA"),
        ColumnSpec::new("voltage", ColumnKind::SensorSeries).with_unit("V"),
        ColumnSpec::new("diameter", ColumnKind::TargetDiameter).with_unit("mm"),
        ColumnSpec::new("carbody", ColumnKind::TargetCarbody),
    ]
}

/// Relation names for the synthetic columns.
pub const MAPPING: &str = "machine=conducted_on_machine\nprogram=uses_program\ncomponent=welds_component\n";

fn id(prefix: &str, i: usize, width: usize) -> String {
    format!("{prefix}{i:0width$}")
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.jitter).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let step = config.current_step;
    // per (machine, program) current offset, small enough to never cross a level
    let offset = |m: usize, p: usize| {
        let h = (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (p as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        ((h >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.2 * step
    };
    let voltage_base: Vec<f64> = (0..config.n_machines).map(|_| rng.random_range(20.0..30.0)).collect();

    let base_block = config.n_rows / config.n_carbodies;
    let extra = config.n_rows % config.n_carbodies;
    let mut rows = Vec::with_capacity(config.n_rows);
    let mut truth = Vec::with_capacity(config.n_rows);
    let mut spot_no = 0usize;
    for cb in 0..config.n_carbodies {
        let size = base_block + usize::from(cb < extra);
        let machine = rng.random_range(0..config.n_machines);
        let program = rng.random_range(0..config.n_programs);
        let carbody = id("CB", cb, 4);
        for _ in 0..size {
            spot_no += 1;
            let spot = id("S", spot_no, 6);
            let level = rng.random_range(0..config.n_diameter_classes);
            let center = config.current_base + (level as f64 + 0.5) * step + offset(machine, program);
            let mut current = Vec::with_capacity(config.series_len);
            for j in 0..config.series_len {
                let stage = (j * 3 / config.series_len) as f64;
                current.push(center + stage * config.stage_separation + noise.sample(&mut rng));
            }
            let current_mean = current.iter().sum::<f64>() / current.len() as f64;
            let planted = config.planted_class(machine, program, current_mean);
            let class = if rng.random::<f64>() < config.noise_rate {
                let other = rng.random_range(0..config.n_diameter_classes - 1);
                if other >= planted { other + 1 } else { other }
            } else {
                planted
            };
            let voltage: Vec<f64> = (0..config.series_len)
                .map(|j| voltage_base[machine] - (j * 3 / config.series_len) as f64 + noise.sample(&mut rng))
                .collect();
            let diameter = DIAMETER_BASE + (class as f64 + 0.5) * DIAMETER_STEP + rng.random_range(-0.2..0.2);
            let timestamp = spot_no as f64 * 10.0 + rng.random_range(0.0..5.0);
            let component = rng.random_range(0..config.n_components);
            rows.push(vec![
                Cell::Text(spot.clone()),
                Cell::Text(id("M", machine, 2)),
                Cell::Text(id("P", program, 3)),
                Cell::Text(id("K", component, 2)),
                Cell::Text("OK".into()),
                Cell::Missing,
                Cell::Real(round(timestamp, 3)),
                Cell::Series(current.iter().map(|&x| round(x, 4)).collect()),
                Cell::Series(voltage.iter().map(|&x| round(x, 4)).collect()),
                Cell::Real(round(diameter, 3)),
                Cell::Text(carbody.clone()),
            ]);
            truth.push(TruthRow {
                spot,
                machine,
                program,
                current_mean,
                planted_class: planted,
                diameter_class: class,
                carbody: carbody.clone(),
            });
        }
    }
    let table = TableDataset::new(columns(), rows)?;
    Ok(SynthOutput { config: config.clone(), table, truth })
}

fn round(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

impl SynthOutput {
    /// Writes the table, schema, relation mapping, ground truth and config to `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.table.write_csv(&dir.join(DATA_FILE))?;
        write_schema(&dir.join(SCHEMA_FILE), self.table.columns())?;
        let mapping = dir.join(MAPPING_FILE);
        std::fs::write(&mapping, MAPPING).map_err(|e| Error::io(&mapping, e))?;
        let mut body = String::from("spot\ttrue_diameter_class\ttrue_carbody\n");
        for t in &self.truth {
            body.push_str(&format!("{}\t{}\t{}\n", t.spot, t.diameter_class, t.carbody));
        }
        let truth = dir.join(TRUTH_FILE);
        std::fs::write(&truth, body).map_err(|e| Error::io(&truth, e))?;
        let cfg = dir.join("synth.conf");
        std::fs::write(&cfg, self.config.to_string()).map_err(|e| Error::io(&cfg, e))
    }
}
