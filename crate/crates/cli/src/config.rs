use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use muench_core::algebra::{enumerate_frames, random_frame, Element, Frame, Sampling};
use muench_core::muench::{eval_single, eval_vector, LevelledPredicate, Mode, OracleUniverse};
use muench_core::ordinals::{check_order_requirements, OrdinalGrid};
use serde::Serialize;

/// Why a command did not succeed. Maps onto the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or configuration: exit 2.
    Config(String),
    /// A checked property failed: exit 1.
    Rejected(String),
}

impl Failure {
    pub fn config(e: impl ToString) -> Self {
        Failure::Config(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Single,
    Vector,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Single => Mode::Single,
            ModeArg::Vector => Mode::Vector,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Frame file (JSON: {"worlds": n, "edges": [[i, j], ...]}).
    #[arg(long, conflicts_with_all = ["random", "exhaustive"])]
    pub frame: Option<PathBuf>,
    /// Random frames: count,size,seed. Frame i uses seed + i.
    #[arg(long, value_name = "COUNT,SIZE,SEED")]
    pub random: Option<String>,
    /// Every GL frame with this many worlds (at most 4).
    #[arg(long, value_name = "N", conflicts_with = "random")]
    pub exhaustive: Option<usize>,
    /// Grid of ordinal notations.
    #[arg(long, default_value = "0,1,2")]
    pub grid: String,
    #[arg(long, value_enum, default_value = "single")]
    pub mode: ModeArg,
    /// Bound on oracle sequence length in vector mode. Unbounded if absent.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// `full`, or a comma list of element bitmasks.
    #[arg(long, default_value = "full")]
    pub oracles: String,
    /// Sampled instances for frames above four worlds.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Seed for sampled instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A frame with a description of where it came from.
#[derive(Clone, Debug)]
pub struct SourcedFrame {
    pub source: String,
    pub frame: Frame,
}

/// The validated configuration shared by `eval`, `suite` and `explore`.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub frames: Vec<SourcedFrame>,
    pub grid: OrdinalGrid,
    pub mode: Mode,
    pub max_len: Option<usize>,
    pub oracles: Option<Vec<u16>>,
    pub samples: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
pub struct ConfigEcho {
    pub grid: String,
    pub mode: Mode,
    pub max_len: Option<usize>,
    pub oracles: String,
    pub samples: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<Self, Failure> {
        let grid = OrdinalGrid::parse(&a.grid).map_err(Failure::config)?;
        if !check_order_requirements(&grid) {
            return Err(Failure::Config(format!("grid {grid} fails the order requirements")));
        }
        let mode = Mode::from(a.mode);
        if a.max_len.is_some() && mode != Mode::Vector {
            return Err(Failure::Config("--max-len applies to vector mode only".into()));
        }
        if a.max_len == Some(0) {
            return Err(Failure::Config("--max-len must be positive".into()));
        }
        let oracles = parse_oracles(&a.oracles)?;
        let frames = load_frames(a)?;
        Ok(RunConfig {
            frames,
            grid,
            mode,
            max_len: a.max_len,
            oracles,
            samples: a.samples,
            seed: a.seed,
            out: a.out.clone(),
        })
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            grid: self.grid.to_string(),
            mode: self.mode,
            max_len: self.max_len,
            oracles: match &self.oracles {
                None => "full".into(),
                Some(v) => v.iter().map(u16::to_string).collect::<Vec<_>>().join(","),
            },
            samples: self.samples,
            seed: self.seed,
        }
    }

    pub fn universe(&self, frame: &Frame) -> Result<OracleUniverse, Failure> {
        match &self.oracles {
            None => Ok(OracleUniverse::full(frame)),
            Some(bits) => {
                let elems = bits
                    .iter()
                    .map(|&b| Element::new(b, frame.worlds()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(Failure::config)?;
                OracleUniverse::new(frame, elems).map_err(Failure::config)
            }
        }
    }

    pub fn predicate(&self, frame: &Frame, mode: Mode) -> Result<LevelledPredicate, Failure> {
        let u = self.universe(frame)?;
        match mode {
            Mode::Single => eval_single(frame, &self.grid, &u),
            Mode::Vector => eval_vector(frame, &self.grid, &u, self.max_len),
        }
        .map_err(Failure::config)
    }

    pub fn sampling(&self, frame: &Frame, salt: u64) -> Sampling {
        Sampling::auto(frame, self.samples, self.seed.wrapping_add(salt))
    }
}

fn parse_oracles(text: &str) -> Result<Option<Vec<u16>>, Failure> {
    let text = text.trim();
    if text == "full" {
        return Ok(None);
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u16>()
                .map_err(|_| Failure::Config(format!("bad oracle element `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn load_frames(a: &RunArgs) -> Result<Vec<SourcedFrame>, Failure> {
    if let Some(path) = &a.frame {
        return Ok(vec![SourcedFrame {
            source: format!("file {}", path.display()),
            frame: load_frame_file(path)?,
        }]);
    }
    if let Some(text) = &a.random {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let [count, size, seed] = parts.as_slice() else {
            return Err(Failure::Config(format!(
                "--random takes count,size,seed (the seed is mandatory), got `{text}`"
            )));
        };
        let num = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| Failure::Config(format!("bad number `{s}` in --random")))
        };
        let (count, size, seed) = (num(count)?, num(size)? as usize, num(seed)?);
        return (0..count)
            .map(|i| {
                let s = seed.wrapping_add(i);
                random_frame(s, size)
                    .map(|frame| SourcedFrame {
                        source: format!("random seed={s} size={size}"),
                        frame,
                    })
                    .map_err(Failure::config)
            })
            .collect();
    }
    if let Some(n) = a.exhaustive {
        let frames = enumerate_frames(n).map_err(Failure::config)?;
        return Ok(frames
            .into_iter()
            .enumerate()
            .map(|(i, frame)| SourcedFrame {
                source: format!("exhaustive n={n} #{i}"),
                frame,
            })
            .collect());
    }
    Err(Failure::Config(
        "no frame source: give --frame, --random or --exhaustive".into(),
    ))
}

pub fn load_frame_file(path: &Path) -> Result<Frame, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Frame::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Writes a JSON report to `out`, or to standard output.
pub fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report).map_err(Failure::config)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
