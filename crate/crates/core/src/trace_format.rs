//! Line-oriented text encoding of trace event streams.
//!
//! A trace file starts with the line `CRTRACE\t1`, holds one event per
//! line and ends with a `PROGRAM_END` event. Fields are separated by tabs;
//! the first field names the event and the rest follow the payload order
//! of [`TraceEvent`]. Inside string fields a backslash, tab or newline is
//! written as `\\`, `\t` or `\n`. Every line ends with a single `\n`.
//!
//! Files may be gzip-compressed as a whole; readers detect this from the
//! magic bytes, so `.crtrace` and `.crtrace.z` carry identical content.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::machine::PromiseKind;
use crate::tracer::{parse_decimal, EventSink, ExprClass, Locality, Status, TraceEvent};

pub const TRACE_MAGIC: &str = "CRTRACE\t1";
pub const TRACE_EXTENSION: &str = "crtrace";
pub const COMPRESSED_TRACE_EXTENSION: &str = "crtrace.z";

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl FormatError {
    pub(crate) fn at(line: usize, message: impl Into<String>) -> FormatError {
        FormatError::Malformed { line, message: message.into() }
    }
}

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(other) => return Err(format!("unknown escape `\\{other}`")),
            None => return Err("dangling backslash".to_string()),
        }
    }
    Ok(out)
}

pub fn kind_token(kind: PromiseKind) -> &'static str {
    match kind {
        PromiseKind::Arg => "ARG",
        PromiseKind::Default => "DEFAULT",
        PromiseKind::Delayed => "DELAYED",
    }
}

pub fn class_token(class: ExprClass) -> &'static str {
    match class {
        ExprClass::Sym => "SYM",
        ExprClass::Const => "CONST",
        ExprClass::Call => "CALL",
        ExprClass::Other => "OTHER",
    }
}

pub fn locality_token(locality: Locality) -> &'static str {
    match locality {
        Locality::None => "NONE",
        Locality::Local => "LOCAL",
        Locality::Lexical => "LEXICAL",
        Locality::Other => "OTHERENV",
    }
}

pub fn parse_kind(s: &str) -> Option<PromiseKind> {
    match s {
        "ARG" => Some(PromiseKind::Arg),
        "DEFAULT" => Some(PromiseKind::Default),
        "DELAYED" => Some(PromiseKind::Delayed),
        _ => None,
    }
}

pub fn parse_class(s: &str) -> Option<ExprClass> {
    match s {
        "SYM" => Some(ExprClass::Sym),
        "CONST" => Some(ExprClass::Const),
        "CALL" => Some(ExprClass::Call),
        "OTHER" => Some(ExprClass::Other),
        _ => None,
    }
}

fn parse_locality(s: &str) -> Option<Locality> {
    match s {
        "NONE" => Some(Locality::None),
        "LOCAL" => Some(Locality::Local),
        "LEXICAL" => Some(Locality::Lexical),
        "OTHERENV" => Some(Locality::Other),
        _ => None,
    }
}

pub fn parse_status(s: &str) -> Option<Status> {
    match s {
        "OK" => Some(Status::Ok),
        code if !code.is_empty() && code.bytes().all(|b| b.is_ascii_uppercase() || b == b'_') => {
            Some(Status::Error(code.to_string()))
        }
        _ => None,
    }
}

/// Encodes one event as a line, without the terminator.
pub fn write_event(ev: &TraceEvent) -> String {
    let fields: Vec<String> = match ev {
        TraceEvent::ProgramStart { name } => vec![escape_field(name)],
        TraceEvent::CallEnter { call, site, n_params, n_args } => {
            vec![call.to_string(), site.to_string(), n_params.to_string(), n_args.to_string()]
        }
        TraceEvent::CallExit { call } => vec![call.to_string()],
        TraceEvent::PromCreate { prom, call, param, kind, class, expr } => vec![
            prom.to_string(),
            call.to_string(),
            escape_field(param),
            kind_token(*kind).to_string(),
            class_token(*class).to_string(),
            escape_field(expr),
        ],
        TraceEvent::PromForceEnter { prom, call, depth } => {
            vec![prom.to_string(), call.to_string(), depth.to_string()]
        }
        TraceEvent::PromForceExit { prom } => vec![prom.to_string()],
        TraceEvent::PromRead { prom, call } | TraceEvent::PromMeta { prom, call } => {
            vec![prom.to_string(), call.to_string()]
        }
        TraceEvent::EvalEnter { env } => vec![env.to_string()],
        TraceEvent::EvalExit => vec![],
        TraceEvent::VarDef { frame, name, locality, prom } | TraceEvent::VarWrite { frame, name, locality, prom } => {
            vec![frame.to_string(), escape_field(name), locality_token(*locality).to_string(), prom.to_string()]
        }
        TraceEvent::VarRead { frame, name } => vec![frame.to_string(), escape_field(name)],
        TraceEvent::ProgramEnd { steps, status } => vec![steps.to_string(), status.to_string()],
    };
    let mut line = ev.name().to_string();
    for field in fields {
        line.push('\t');
        line.push_str(&field);
    }
    line
}

struct Fields<'a> {
    items: Vec<&'a str>,
    line: usize,
}

impl<'a> Fields<'a> {
    fn int<T: std::str::FromStr>(&self, i: usize) -> Result<T, FormatError> {
        parse_decimal(self.items[i])
            .ok_or_else(|| FormatError::at(self.line, format!("bad integer `{}`", self.items[i])))
    }

    fn text(&self, i: usize) -> Result<String, FormatError> {
        unescape_field(self.items[i]).map_err(|m| FormatError::at(self.line, m))
    }

    fn token<T>(&self, i: usize, parse: fn(&str) -> Option<T>, what: &str) -> Result<T, FormatError> {
        parse(self.items[i]).ok_or_else(|| FormatError::at(self.line, format!("bad {what} `{}`", self.items[i])))
    }
}

/// Decodes one line (without terminator). `line_no` is used in errors.
pub fn read_event(line: &str, line_no: usize) -> Result<TraceEvent, FormatError> {
    let items: Vec<&str> = line.split('\t').collect();
    let name = items[0];
    let arity = match name {
        "PROGRAM_START" | "CALL_EXIT" | "PROM_FORCE_EXIT" | "EVAL_ENTER" => 1,
        "CALL_ENTER" | "VAR_DEF" | "VAR_WRITE" => 4,
        "PROM_CREATE" => 6,
        "PROM_FORCE_ENTER" => 3,
        "PROM_READ" | "PROM_META" | "VAR_READ" | "PROGRAM_END" => 2,
        "EVAL_EXIT" => 0,
        other => return Err(FormatError::at(line_no, format!("unknown event `{}`", escape_field(other)))),
    };
    if items.len() != arity + 1 {
        return Err(FormatError::at(line_no, format!("{name} takes {arity} fields, found {}", items.len() - 1)));
    }
    let f = Fields { items, line: line_no };
    let ev = match name {
        "PROGRAM_START" => TraceEvent::ProgramStart { name: f.text(1)? },
        "CALL_ENTER" => TraceEvent::CallEnter {
            call: f.int(1)?,
            site: f.items[2].parse().map_err(|m: String| FormatError::at(line_no, m))?,
            n_params: f.int(3)?,
            n_args: f.int(4)?,
        },
        "CALL_EXIT" => TraceEvent::CallExit { call: f.int(1)? },
        "PROM_CREATE" => TraceEvent::PromCreate {
            prom: f.int(1)?,
            call: f.int(2)?,
            param: f.text(3)?,
            kind: f.token(4, parse_kind, "promise kind")?,
            class: f.token(5, parse_class, "expression class")?,
            expr: f.text(6)?,
        },
        "PROM_FORCE_ENTER" => TraceEvent::PromForceEnter { prom: f.int(1)?, call: f.int(2)?, depth: f.int(3)? },
        "PROM_FORCE_EXIT" => TraceEvent::PromForceExit { prom: f.int(1)? },
        "PROM_READ" => TraceEvent::PromRead { prom: f.int(1)?, call: f.int(2)? },
        "PROM_META" => TraceEvent::PromMeta { prom: f.int(1)?, call: f.int(2)? },
        "EVAL_ENTER" => TraceEvent::EvalEnter { env: f.int(1)? },
        "EVAL_EXIT" => TraceEvent::EvalExit,
        "VAR_DEF" => TraceEvent::VarDef {
            frame: f.int(1)?,
            name: f.text(2)?,
            locality: f.token(3, parse_locality, "locality")?,
            prom: f.int(4)?,
        },
        "VAR_WRITE" => TraceEvent::VarWrite {
            frame: f.int(1)?,
            name: f.text(2)?,
            locality: f.token(3, parse_locality, "locality")?,
            prom: f.int(4)?,
        },
        "VAR_READ" => TraceEvent::VarRead { frame: f.int(1)?, name: f.text(2)? },
        "PROGRAM_END" => TraceEvent::ProgramEnd { steps: f.int(1)?, status: f.token(2, parse_status, "status")? },
        _ => unreachable!(),
    };
    Ok(ev)
}

/// Streams events to a writer, header first. I/O errors are held until
/// [`TraceWriter::finish`] so the writer can act as an [`EventSink`].
pub struct TraceWriter<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> TraceWriter<W> {
        let error = writeln!(out, "{TRACE_MAGIC}").err();
        TraceWriter { out, error }
    }

    pub fn write(&mut self, ev: &TraceEvent) {
        if self.error.is_none() {
            let line = write_event(ev);
            self.error = self.out.write_all(line.as_bytes()).and_then(|_| self.out.write_all(b"\n")).err();
        }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> EventSink for TraceWriter<W> {
    fn emit(&mut self, event: TraceEvent) {
        self.write(&event);
    }
}

/// Serializes a complete event sequence to bytes.
pub fn encode_trace(events: &[TraceEvent]) -> Vec<u8> {
    let mut writer = TraceWriter::new(Vec::new());
    for ev in events {
        writer.write(ev);
    }
    writer.finish().expect("writing to memory cannot fail")
}

/// One-pass reader. Yields events until `PROGRAM_END`; a stream that stops
/// before it, or continues after it, is an error.
pub struct TraceReader<R: BufRead> {
    input: R,
    line_no: usize,
    buf: Vec<u8>,
    started: bool,
    ended: bool,
    failed: bool,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(input: R) -> TraceReader<R> {
        TraceReader { input, line_no: 0, buf: Vec::new(), started: false, ended: false, failed: false }
    }

    /// Next line without its terminator; `None` at end of input.
    fn next_line(&mut self) -> Result<Option<String>, FormatError> {
        self.buf.clear();
        let n = self.input.read_until(b'\n', &mut self.buf)?;
        if n == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        if self.buf.pop() != Some(b'\n') {
            return Err(FormatError::at(self.line_no, "truncated line (missing newline)"));
        }
        String::from_utf8(std::mem::take(&mut self.buf))
            .map(Some)
            .map_err(|_| FormatError::at(self.line_no, "invalid UTF-8"))
    }

    fn advance(&mut self) -> Result<Option<TraceEvent>, FormatError> {
        if !self.started {
            self.started = true;
            match self.next_line()? {
                Some(line) if line == TRACE_MAGIC => {}
                Some(line) if line.starts_with("CRTRACE\t") => {
                    return Err(FormatError::at(1, "unsupported trace format version"))
                }
                _ => return Err(FormatError::at(1, "missing CRTRACE header")),
            }
        }
        let line = self.next_line()?;
        if self.ended {
            return match line {
                None => Ok(None),
                Some(_) => Err(FormatError::at(self.line_no, "event after PROGRAM_END")),
            };
        }
        let Some(line) = line else {
            return Err(FormatError::at(self.line_no + 1, "truncated trace: missing PROGRAM_END"));
        };
        let ev = read_event(&line, self.line_no)?;
        if matches!(ev, TraceEvent::ProgramEnd { .. }) {
            self.ended = true;
        }
        Ok(Some(ev))
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TraceEvent, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.advance() {
            Ok(ev) => ev.map(Ok),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Wraps `input` in a gzip decoder when it starts with the gzip magic.
pub fn decompressing_reader<'a, R: BufRead + 'a>(mut input: R) -> io::Result<Box<dyn BufRead + 'a>> {
    let head = input.fill_buf()?;
    if head.starts_with(&GZIP_MAGIC) {
        Ok(Box::new(BufReader::new(GzDecoder::new(input))))
    } else {
        Ok(Box::new(input))
    }
}

pub fn open_trace(path: &Path) -> io::Result<TraceReader<Box<dyn BufRead>>> {
    let file = BufReader::new(File::open(path)?);
    Ok(TraceReader::new(decompressing_reader(file)?))
}

pub fn read_trace_bytes(bytes: &[u8]) -> Result<Vec<TraceEvent>, FormatError> {
    TraceReader::new(decompressing_reader(bytes)?).collect()
}

/// Writes a whole trace, gzip-compressed when `compress` is set.
pub fn write_trace_file(path: &Path, events: &[TraceEvent], compress: bool) -> io::Result<()> {
    let file = BufWriter::new(File::create(path)?);
    if compress {
        let mut writer = TraceWriter::new(GzEncoder::new(file, Compression::default()));
        for ev in events {
            writer.write(ev);
        }
        writer.finish()?.finish()?.flush()
    } else {
        let mut writer = TraceWriter::new(file);
        for ev in events {
            writer.write(ev);
        }
        writer.finish()?;
        Ok(())
    }
}

/// Reads all of `input`, undoing compression if present.
pub fn read_all_decompressed(input: impl Read) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    decompressing_reader(BufReader::new(input))?.read_to_end(&mut out)?;
    Ok(out)
}
