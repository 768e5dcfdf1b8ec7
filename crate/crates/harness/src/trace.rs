//! Trace CSV: `rep,chain,iter,kind,accepted,log_density,` then either the
//! coordinates `x0,x1,...` or a single `tree` column holding the canonical
//! topology string. Floats are written in Rust's shortest round-trip form,
//! so reading a trace back gives the exact values that were written.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use steep::phylo::TreeTopology;
use steep::proposals::MoveKind;
use steep::samplers::StepOutcome;
use steep::ContinuousState;

use crate::error::{HarnessError, Result};

pub const FIXED_COLUMNS: [&str; 6] = ["rep", "chain", "iter", "kind", "accepted", "log_density"];
pub const TRACE_FILE: &str = "trace.csv";
const PARTS_DIR: &str = "parts";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateLayout {
    Coords(usize),
    Tree,
}

impl StateLayout {
    pub fn header(self) -> Vec<String> {
        let mut h: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        match self {
            Self::Coords(d) => h.extend((0..d).map(|k| format!("x{k}"))),
            Self::Tree => h.push("tree".into()),
        }
        h
    }
}

/// States that can be written to a trace row.
pub trait TraceState {
    fn layout(&self) -> StateLayout;
    fn push_fields(&self, out: &mut Vec<String>);
}

impl TraceState for ContinuousState {
    fn layout(&self) -> StateLayout {
        StateLayout::Coords(self.dim())
    }
    fn push_fields(&self, out: &mut Vec<String>) {
        out.extend(self.iter().map(|v| v.to_string()));
    }
}

impl TraceState for TreeTopology {
    fn layout(&self) -> StateLayout {
        StateLayout::Tree
    }
    fn push_fields(&self, out: &mut Vec<String>) {
        out.push(self.canonical());
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateValue {
    Coords(Vec<f64>),
    Tree(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub rep: u64,
    pub chain: usize,
    pub iter: u64,
    pub kind: MoveKind,
    pub accepted: bool,
    pub log_density: f64,
    pub state: StateValue,
}

/// Writes rows without a header; the header goes on when parts are merged.
pub struct TraceWriter {
    inner: csv::Writer<BufWriter<File>>,
    path: PathBuf,
    fields: Vec<String>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(Self {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file)),
            path: path.to_path_buf(),
            fields: Vec::new(),
        })
    }

    pub fn write<S: TraceState>(
        &mut self,
        rep: u64,
        chain: usize,
        iter: u64,
        outcome: StepOutcome,
        log_density: f64,
        state: &S,
    ) -> Result<()> {
        self.fields.clear();
        self.fields.extend([
            rep.to_string(),
            chain.to_string(),
            iter.to_string(),
            outcome.kind.as_str().to_string(),
            u8::from(outcome.accepted).to_string(),
            log_density.to_string(),
        ]);
        state.push_fields(&mut self.fields);
        self.inner.write_record(&self.fields).map_err(|e| self.csv_error(e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| HarnessError::io(&self.path, e))
    }

    fn csv_error(&self, e: csv::Error) -> HarnessError {
        HarnessError::Io {
            path: self.path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        }
    }
}

/// Per-repetition part files live under `out/parts/` until merged.
pub fn part_path(out: &Path, rep: u64) -> PathBuf {
    out.join(PARTS_DIR).join(format!("rep-{rep:06}.csv"))
}

pub fn prepare_parts(out: &Path) -> Result<()> {
    let dir = out.join(PARTS_DIR);
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))
}

/// Concatenates the part files of `reps` repetitions in order under one
/// header into `out/trace.csv` and removes the parts.
pub fn merge_parts(out: &Path, reps: u64, layout: StateLayout) -> Result<PathBuf> {
    let path = out.join(TRACE_FILE);
    let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = csv::WriterBuilder::new().from_writer(Vec::new());
    header
        .write_record(layout.header())
        .expect("writing to memory cannot fail");
    let header = header.into_inner().expect("in-memory writer");
    w.write_all(&header).map_err(|e| HarnessError::io(&path, e))?;
    let mut buf = Vec::new();
    for rep in 0..reps {
        let part = part_path(out, rep);
        buf.clear();
        File::open(&part)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| HarnessError::io(&part, e))?;
        w.write_all(&buf).map_err(|e| HarnessError::io(&path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(&path, e))?;
    let dir = out.join(PARTS_DIR);
    fs::remove_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(path)
}

/// Parses a trace file. Malformed rows, and iterations that fail to
/// increase within a `(rep, chain)` pair, are reported with their line.
pub fn read_trace(path: &Path) -> Result<(StateLayout, Vec<TraceRecord>)> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_trace(file, &path.display().to_string())
}

pub fn parse_trace<R: Read>(input: R, name: &str) -> Result<(StateLayout, Vec<TraceRecord>)> {
    let err = |line: u64, msg: String| HarnessError::Trace {
        path: name.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 7 || names[..6] != FIXED_COLUMNS {
        return Err(err(1, format!("header must start with {}", FIXED_COLUMNS.join(","))));
    }
    let layout = if names[6..] == ["tree"] {
        StateLayout::Tree
    } else {
        let d = names.len() - 6;
        if names[6..].iter().enumerate().any(|(k, n)| *n != format!("x{k}")) {
            return Err(err(1, "state columns must be `tree` or x0, x1, ...".into()));
        }
        StateLayout::Coords(d)
    };
    let mut records = Vec::new();
    let mut last: HashMap<(u64, usize), u64> = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |k: usize| row.get(k).unwrap_or("");
        let num = |k: usize| -> Result<u64> {
            field(k)
                .parse::<u64>()
                .map_err(|e| err(line, format!("column {}: {:?}: {e}", FIXED_COLUMNS[k], field(k))))
        };
        let float = |k: usize, col: &str| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .map_err(|e| err(line, format!("column {col}: {:?}: {e}", field(k))))
        };
        let rep = num(0)?;
        let chain = num(1)? as usize;
        let iter = num(2)?;
        let kind = match field(3) {
            "local" => MoveKind::Local,
            "long" => MoveKind::LongRange,
            other => return Err(err(line, format!("column kind: {other:?} is not local or long"))),
        };
        let accepted = match field(4) {
            "0" => false,
            "1" => true,
            other => return Err(err(line, format!("column accepted: {other:?} is not 0 or 1"))),
        };
        let log_density = float(5, "log_density")?;
        if log_density.is_nan() {
            return Err(err(line, "column log_density: NaN".into()));
        }
        let state = match layout {
            StateLayout::Tree => StateValue::Tree(field(6).to_string()),
            StateLayout::Coords(d) => StateValue::Coords(
                (0..d)
                    .map(|k| float(6 + k, &format!("x{k}")))
                    .collect::<Result<Vec<f64>>>()?,
            ),
        };
        if let Some(prev) = last.insert((rep, chain), iter) {
            if iter <= prev {
                return Err(err(
                    line,
                    format!("iteration {iter} does not follow {prev} for rep {rep}, chain {chain}"),
                ));
            }
        }
        records.push(TraceRecord {
            rep,
            chain,
            iter,
            kind,
            accepted,
            log_density,
            state,
        });
    }
    Ok((layout, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<(StateLayout, Vec<TraceRecord>)> {
        parse_trace(s.as_bytes(), "t.csv")
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = std::env::temp_dir().join(format!("steep-trace-test-{}", std::process::id()));
        prepare_parts(&dir).unwrap();
        let xs = [0.1 + 0.2, -1e-300, 5.000000000000001];
        for rep in 0..2 {
            let mut w = TraceWriter::create(&part_path(&dir, rep)).unwrap();
            for (i, &x) in xs.iter().enumerate() {
                let state = ContinuousState::new(vec![x, -x]).unwrap();
                let outcome = StepOutcome { kind: MoveKind::LongRange, accepted: i % 2 == 0 };
                w.write(rep, 1, i as u64 + 1, outcome, f64::NEG_INFINITY, &state).unwrap();
            }
            w.finish().unwrap();
        }
        let path = merge_parts(&dir, 2, StateLayout::Coords(2)).unwrap();
        let (layout, recs) = read_trace(&path).unwrap();
        assert_eq!(layout, StateLayout::Coords(2));
        assert_eq!(recs.len(), 6);
        assert_eq!(recs[3].rep, 1);
        assert_eq!(recs[1].state, StateValue::Coords(vec![-1e-300, 1e-300]));
        assert_eq!(recs[0].log_density, f64::NEG_INFINITY);
        assert!(!dir.join(PARTS_DIR).exists());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn tree_rows_quote_commas() {
        let (layout, recs) =
            parse("rep,chain,iter,kind,accepted,log_density,tree\n0,0,10,local,1,-3.5,\"(1,2,(3,4))\"\n").unwrap();
        assert_eq!(layout, StateLayout::Tree);
        assert_eq!(recs[0].state, StateValue::Tree("(1,2,(3,4))".into()));
    }

    #[test]
    fn empty_trace_has_no_rows() {
        let (_, recs) = parse("rep,chain,iter,kind,accepted,log_density,x0\n").unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let head = "rep,chain,iter,kind,accepted,log_density,x0\n";
        let cases = [
            format!("{head}0,0,1,local,1,-1,0.5\n0,0,2,sideways,1,-1,0.5\n"),
            format!("{head}0,0,1,local,1,-1,0.5\n0,0,2,local,2,-1,0.5\n"),
            format!("{head}0,0,1,local,1,-1,0.5\n0,0,2,local,1,abc,0.5\n"),
            format!("{head}0,0,1,local,1,-1,0.5\n0,0,2,local,1,-1\n"),
            format!("{head}0,0,1,local,1,-1,0.5\n0,0,1,local,1,-1,0.5\n"),
        ];
        for c in &cases {
            match parse(c) {
                Err(HarnessError::Trace { line, .. }) => assert_eq!(line, 3, "{c}"),
                other => panic!("expected a trace error, got {other:?}"),
            }
        }
        assert!(matches!(parse("a,b\n"), Err(HarnessError::Trace { line: 1, .. })));
    }
}
