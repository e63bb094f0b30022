//! Per-(step, position) coin programs and their line-based text form.
//!
//! ```text
//! # 4-site finite walk
//! steps 20
//! default coin qwp 45
//! at * pos -3,3 coin R
//! ```
//!
//! Overrides are matched in textual order and the last match wins. A program
//! without a `default coin` line uses `T`, the EOM without voltage.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::coin::{CoinOperator, CoinSpec};
use crate::{Error, ParseError, ParseErrorKind, Result};

/// Number of distinct operators one EOM run can switch between
/// (no voltage, +U0, -U0).
pub const HARDWARE_COIN_LEVELS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepSpec {
    All,
    Single(u32),
    /// Inclusive range.
    Range(u32, u32),
}

impl StepSpec {
    pub fn contains(&self, step: u32) -> bool {
        match *self {
            StepSpec::All => true,
            StepSpec::Single(s) => s == step,
            StepSpec::Range(a, b) => (a..=b).contains(&step),
        }
    }
}

impl fmt::Display for StepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSpec::All => f.write_str("*"),
            StepSpec::Single(s) => write!(f, "{s}"),
            StepSpec::Range(a, b) => write!(f, "{a}..{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PositionSpec {
    All,
    List(Vec<i64>),
}

impl PositionSpec {
    pub fn contains(&self, x: i64) -> bool {
        match self {
            PositionSpec::All => true,
            PositionSpec::List(xs) => xs.contains(&x),
        }
    }
}

impl fmt::Display for PositionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PositionSpec::All => f.write_str("*"),
            PositionSpec::List(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub steps: StepSpec,
    pub positions: PositionSpec,
    pub coin: CoinSpec,
}

/// An immutable coin program over steps `1..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    steps: u32,
    default_coin: CoinSpec,
    overrides: Vec<Override>,
    // operators cached in the same order as the specs
    default_op: CoinOperator,
    override_ops: Vec<CoinOperator>,
}

impl Schedule {
    pub fn new(steps: u32, default_coin: CoinSpec) -> Result<Schedule> {
        if steps == 0 {
            return Err(Error::param("steps", "must be positive"));
        }
        Ok(Schedule {
            steps,
            default_coin,
            overrides: Vec::new(),
            default_op: default_coin.operator(),
            override_ops: Vec::new(),
        })
    }

    /// Appends an override; it takes precedence over all earlier ones.
    pub fn with_override(
        mut self,
        steps: StepSpec,
        positions: PositionSpec,
        coin: CoinSpec,
    ) -> Result<Schedule> {
        match steps {
            StepSpec::All => {}
            StepSpec::Single(s) => self.check_step(s)?,
            StepSpec::Range(a, b) => {
                if a > b {
                    return Err(Error::EmptyRange);
                }
                self.check_step(a)?;
                self.check_step(b)?;
            }
        }
        self.override_ops.push(coin.operator());
        self.overrides.push(Override {
            steps,
            positions,
            coin,
        });
        Ok(self)
    }

    fn check_step(&self, step: u32) -> Result<()> {
        if step == 0 || step > self.steps {
            Err(Error::StepOutOfRange {
                step,
                steps: self.steps,
            })
        } else {
            Ok(())
        }
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn default_coin(&self) -> CoinSpec {
        self.default_coin
    }

    pub fn overrides(&self) -> &[Override] {
        &self.overrides
    }

    fn index_at(&self, step: u32, x: i64) -> Option<usize> {
        self.overrides
            .iter()
            .rposition(|o| o.steps.contains(step) && o.positions.contains(x))
    }

    pub fn coin_at(&self, step: u32, x: i64) -> Result<CoinOperator> {
        self.check_step(step)?;
        Ok(self.op_at(step, x))
    }

    pub fn coin_spec_at(&self, step: u32, x: i64) -> Result<CoinSpec> {
        self.check_step(step)?;
        Ok(match self.index_at(step, x) {
            Some(i) => self.overrides[i].coin,
            None => self.default_coin,
        })
    }

    /// Lookup without the range check, for callers iterating `1..=steps`.
    pub(crate) fn op_at(&self, step: u32, x: i64) -> CoinOperator {
        match self.index_at(step, x) {
            Some(i) => self.override_ops[i],
            None => self.default_op,
        }
    }

    /// The first `steps` steps of the program. Overrides that start later
    /// are dropped, ranges are clipped.
    pub fn truncated(&self, steps: u32) -> Result<Schedule> {
        self.check_step(steps)?;
        let mut out = Schedule::new(steps, self.default_coin)?;
        for o in &self.overrides {
            let spec = match o.steps {
                StepSpec::All => StepSpec::All,
                StepSpec::Single(s) if s <= steps => StepSpec::Single(s),
                StepSpec::Range(a, b) if a <= steps => StepSpec::Range(a, b.min(steps)),
                _ => continue,
            };
            out = out.with_override(spec, o.positions.clone(), o.coin)?;
        }
        Ok(out)
    }

    /// Same program with every coin replaced by `f(coin)`.
    pub fn map_coins<F>(&self, f: F) -> Schedule
    where
        F: Fn(&CoinSpec) -> CoinSpec,
    {
        let default_coin = f(&self.default_coin);
        let overrides: Vec<Override> = self
            .overrides
            .iter()
            .map(|o| Override {
                steps: o.steps.clone(),
                positions: o.positions.clone(),
                coin: f(&o.coin),
            })
            .collect();
        Schedule {
            steps: self.steps,
            default_op: default_coin.operator(),
            override_ops: overrides.iter().map(|o| o.coin.operator()).collect(),
            default_coin,
            overrides,
        }
    }

    /// Distinct operators the program can produce, in first-use order.
    /// Operators are compared exactly, not up to phase.
    pub fn distinct_coins(&self) -> Vec<CoinOperator> {
        let mut out = vec![self.default_op];
        for op in &self.override_ops {
            if !out.contains(op) {
                out.push(*op);
            }
        }
        out
    }

    /// `true` when one EOM run could not realize the program.
    pub fn exceeds_hardware_levels(&self) -> bool {
        self.distinct_coins().len() > HARDWARE_COIN_LEVELS
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "steps {}", self.steps)?;
        writeln!(f, "default coin {}", self.default_coin)?;
        for o in &self.overrides {
            writeln!(f, "at {} pos {} coin {}", o.steps, o.positions, o.coin)?;
        }
        Ok(())
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Schedule> {
        parse_schedule(s)
    }
}

/// Reflections at `x = -b` and `x = b` for all steps, `interior` elsewhere.
pub fn finite_graph_schedule(b: u32, interior: CoinSpec, steps: u32) -> Result<Schedule> {
    if b == 0 {
        return Err(Error::param("half_width", "must be at least 1"));
    }
    let b = i64::from(b);
    Schedule::new(steps, interior)?.with_override(
        StepSpec::All,
        PositionSpec::List(vec![-b, b]),
        CoinSpec::R,
    )
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, line.len()));
    }
    out.into_iter()
        .map(|(s, e)| Token {
            text: &line[s..e],
            column: line[..s].chars().count() + 1,
        })
        .collect()
}

struct LineCursor<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> LineCursor<'a> {
    fn error_at(&self, index: usize, kind: ParseErrorKind) -> ParseError {
        let column = self.tokens.get(index).map_or(self.end_column, |t| t.column);
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn next(&mut self, expected: &'static str) -> core::result::Result<&'a str, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.text)
            }
            None => Err(self.error_at(self.pos, ParseErrorKind::UnexpectedEnd { expected })),
        }
    }

    fn keyword(&mut self, word: &'static str) -> core::result::Result<(), ParseError> {
        let at = self.pos;
        let t = self.next(word)?;
        if t == word {
            Ok(())
        } else {
            Err(self.error_at(
                at,
                ParseErrorKind::UnexpectedToken {
                    expected: word,
                    found: t.to_string(),
                },
            ))
        }
    }

    /// Consumes the rest of the line as a coin.
    fn coin(&mut self) -> core::result::Result<CoinSpec, ParseError> {
        let start = self.pos;
        let rest: Vec<&str> = self.tokens[start..].iter().map(|t| t.text).collect();
        self.pos = self.tokens.len();
        CoinSpec::from_tokens(&rest).map_err(|(i, kind)| self.error_at(start + i, kind))
    }

    fn finish(&self) -> core::result::Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(self.error_at(
                self.pos,
                ParseErrorKind::UnexpectedToken {
                    expected: "end of line",
                    found: t.text.to_string(),
                },
            )),
        }
    }
}

fn parse_u32(text: &str) -> Option<u32> {
    text.parse::<u32>().ok()
}

/// Parses the schedule language. Errors carry 1-based line and column.
pub fn parse_schedule(text: &str) -> Result<Schedule> {
    let mut steps: Option<u32> = None;
    let mut default_coin: Option<CoinSpec> = None;
    // (override, line, column of the step spec)
    let mut overrides: Vec<(Override, usize, usize)> = Vec::new();
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            continue;
        }
        let end_column = raw.chars().count() + 1;
        let mut cur = LineCursor {
            line: line_no,
            tokens,
            pos: 0,
            end_column,
        };
        let head = cur.next("statement")?;
        match head {
            "steps" => {
                let at = cur.pos;
                let t = cur.next("step count")?;
                let n: i64 = t
                    .parse()
                    .map_err(|_| cur.error_at(at, ParseErrorKind::InvalidNumber(t.to_string())))?;
                if n <= 0 {
                    return Err(cur.error_at(at, ParseErrorKind::NonPositiveSteps).into());
                }
                let n = u32::try_from(n)
                    .map_err(|_| cur.error_at(at, ParseErrorKind::InvalidNumber(t.to_string())))?;
                if steps.is_some() {
                    return Err(cur.error_at(0, ParseErrorKind::DuplicateSteps).into());
                }
                cur.finish()?;
                steps = Some(n);
            }
            "default" => {
                cur.keyword("coin")?;
                default_coin = Some(cur.coin()?);
            }
            "at" => {
                let at = cur.pos;
                let column = cur.tokens.get(at).map_or(end_column, |t| t.column);
                let st = cur.next("step spec")?;
                let step_spec = parse_step_spec(st).map_err(|k| cur.error_at(at, k))?;
                cur.keyword("pos")?;
                let at = cur.pos;
                let pt = cur.next("position spec")?;
                let positions = parse_position_spec(pt).map_err(|k| cur.error_at(at, k))?;
                cur.keyword("coin")?;
                let coin = cur.coin()?;
                overrides.push((
                    Override {
                        steps: step_spec,
                        positions,
                        coin,
                    },
                    line_no,
                    column,
                ));
            }
            other => {
                return Err(cur
                    .error_at(
                        0,
                        ParseErrorKind::UnexpectedToken {
                            expected: "`steps`, `default` or `at`",
                            found: other.to_string(),
                        },
                    )
                    .into())
            }
        }
    }

    let steps = steps.ok_or(ParseError {
        line: last_line.max(1),
        column: 1,
        kind: ParseErrorKind::MissingSteps,
    })?;
    let mut schedule = Schedule::new(steps, default_coin.unwrap_or(CoinSpec::T))?;
    for (o, line, column) in overrides {
        let located = |step| ParseError {
            line,
            column,
            kind: ParseErrorKind::StepOutOfRange { step, steps },
        };
        schedule = match schedule.with_override(o.steps, o.positions, o.coin) {
            Ok(s) => s,
            Err(Error::StepOutOfRange { step, .. }) => return Err(located(step).into()),
            Err(e) => return Err(e),
        };
    }
    Ok(schedule)
}

fn parse_step_spec(t: &str) -> core::result::Result<StepSpec, ParseErrorKind> {
    if t == "*" {
        return Ok(StepSpec::All);
    }
    if let Some((a, b)) = t.split_once("..") {
        let (a, b) = match (parse_u32(a), parse_u32(b)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(ParseErrorKind::MalformedRange(t.to_string())),
        };
        if a > b {
            return Err(ParseErrorKind::MalformedRange(t.to_string()));
        }
        return Ok(StepSpec::Range(a, b));
    }
    parse_u32(t)
        .map(StepSpec::Single)
        .ok_or_else(|| ParseErrorKind::InvalidNumber(t.to_string()))
}

fn parse_position_spec(t: &str) -> core::result::Result<PositionSpec, ParseErrorKind> {
    if t == "*" {
        return Ok(PositionSpec::All);
    }
    t.split(',')
        .map(|p| {
            p.parse::<i64>()
                .map_err(|_| ParseErrorKind::InvalidNumber(p.to_string()))
        })
        .collect::<core::result::Result<Vec<i64>, _>>()
        .map(PositionSpec::List)
}

/// Renders `schedule` and parses it back; used by round-trip checks.
pub fn render(schedule: &Schedule) -> String {
    schedule.to_string()
}
