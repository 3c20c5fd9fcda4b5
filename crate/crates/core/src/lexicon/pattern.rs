//! Identifier shape patterns.
//!
//! Two pattern kinds are understood:
//!
//! * Shape patterns, a small regular-expression subset: `\d` (digit),
//!   character classes such as `[A-Z]` or `[a-z0-9]`, and the quantifiers
//!   `{n}` and `{m,n}` applied to the preceding atom. `\` escapes the next
//!   character; every other character (including `(`, `)`, `.`, `-` and
//!   space) is a literal. Example: `(\d{3}) \d{3}-\d{4}`.
//! * Date patterns, prefixed with `date:`, built from the fields `YYYY`, `YY`,
//!   `MM`, `M`, `DD`, `D` and `MonthName`; other characters are literal.
//!   Example: `date:MonthName D, YYYY`. Two-digit years pivot at 50
//!   (`50..=99` → 19xx, `00..=49` → 20xx).

use std::collections::HashSet;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use regex::Regex;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum CharSet {
    Literal(char),
    Ranges(Vec<(char, char)>),
}

impl CharSet {
    fn size(&self) -> u128 {
        match self {
            CharSet::Literal(_) => 1,
            CharSet::Ranges(r) => r.iter().map(|(a, b)| (*b as u128) - (*a as u128) + 1).sum(),
        }
    }

    fn nth(&self, mut i: u64) -> char {
        match self {
            CharSet::Literal(c) => *c,
            CharSet::Ranges(ranges) => {
                for (a, b) in ranges {
                    let n = *b as u64 - *a as u64 + 1;
                    if i < n {
                        return char::from_u32(*a as u32 + i as u32).expect("range char");
                    }
                    i -= n;
                }
                unreachable!("index past class size")
            }
        }
    }

    fn regex(&self) -> String {
        match self {
            CharSet::Literal(c) => regex::escape(&c.to_string()),
            CharSet::Ranges(r) => {
                let body: String = r
                    .iter()
                    .map(|(a, b)| {
                        if a == b {
                            regex::escape(&a.to_string())
                        } else {
                            format!("{}-{}", regex::escape(&a.to_string()), regex::escape(&b.to_string()))
                        }
                    })
                    .collect();
                format!("[{body}]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Atom {
    set: CharSet,
    min: u32,
    max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DateField {
    Year4,
    Year2,
    Month2,
    Month,
    Day2,
    Day,
    MonthName,
    Lit(char),
}

#[derive(Debug, Clone)]
enum Kind {
    Shape(Vec<Atom>),
    Date(Vec<DateField>),
}

/// A compiled identifier pattern. See the module docs for the syntax.
#[derive(Debug, Clone)]
pub struct Pattern {
    source: String,
    kind: Kind,
    regex: Regex,
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn bad(pattern: &str, message: impl Into<String>) -> Error {
    Error::Pattern {
        pattern: pattern.to_string(),
        message: message.into(),
    }
}

impl Pattern {
    pub fn parse(source: &str) -> Result<Self> {
        if source.contains(['\t', '\n', '\r']) {
            return Err(bad(source, "patterns may not contain tabs or newlines"));
        }
        let (kind, re) = match source.strip_prefix("date:") {
            Some(fmt) => {
                let fields = parse_date_fields(fmt);
                let re = date_regex(&fields);
                (Kind::Date(fields), re)
            }
            None => {
                let atoms = parse_shape(source)?;
                let re = atoms
                    .iter()
                    .map(|a| {
                        let body = a.set.regex();
                        if a.min == 1 && a.max == 1 {
                            body
                        } else if a.min == a.max {
                            format!("{body}{{{}}}", a.min)
                        } else {
                            format!("{body}{{{},{}}}", a.min, a.max)
                        }
                    })
                    .collect::<String>();
                (Kind::Shape(atoms), re)
            }
        };
        if re.is_empty() {
            return Err(bad(source, "empty pattern"));
        }
        let regex = Regex::new(&format!("^(?:{re})$")).map_err(|e| bad(source, e.to_string()))?;
        Ok(Self {
            source: source.to_string(),
            kind,
            regex,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_date(&self) -> bool {
        matches!(self.kind, Kind::Date(_))
    }

    /// Whether `s` has this pattern's shape (and, for dates, is a real
    /// calendar date).
    pub fn matches(&self, s: &str) -> bool {
        if !self.regex.is_match(s) {
            return false;
        }
        match &self.kind {
            Kind::Shape(_) => true,
            Kind::Date(fields) => parse_date(fields, &self.regex, s).is_some(),
        }
    }

    /// Draw one value. Dates are uniform over days in `years`; shape atoms
    /// draw a uniform length in `min..=max`, then uniform characters.
    pub fn sample(&self, rng: &mut RandomStream, years: (i32, i32)) -> String {
        match &self.kind {
            Kind::Shape(atoms) => {
                let mut out = String::new();
                for a in atoms {
                    let len = rng.range_inclusive(a.min as u64, a.max as u64);
                    let size = a.set.size() as u64;
                    for _ in 0..len {
                        out.push(a.set.nth(rng.below(size)));
                    }
                }
                out
            }
            Kind::Date(fields) => {
                let (first, last) = year_bounds(years);
                let span = (last - first).num_days() as u64;
                let day = first + chrono::Days::new(rng.range_inclusive(0, span));
                render_date(fields, day)
            }
        }
    }

    /// Number of distinct strings this pattern can produce.
    pub fn space_size(&self, years: (i32, i32)) -> u128 {
        match &self.kind {
            Kind::Shape(atoms) => atoms.iter().fold(1u128, |acc, a| {
                let s = a.set.size();
                let per: u128 = (a.min..=a.max).fold(0u128, |t, k| t.saturating_add(s.saturating_pow(k)));
                acc.saturating_mul(per)
            }),
            Kind::Date(fields) => {
                let (first, last) = year_bounds(years);
                first
                    .iter_days()
                    .take_while(|d| *d <= last)
                    .map(|d| render_date(fields, d))
                    .collect::<HashSet<_>>()
                    .len() as u128
            }
        }
    }
}

fn year_bounds(years: (i32, i32)) -> (NaiveDate, NaiveDate) {
    let first = NaiveDate::from_ymd_opt(years.0, 1, 1).expect("year range start");
    let last = NaiveDate::from_ymd_opt(years.1, 12, 31).expect("year range end");
    (first, last)
}

fn parse_shape(src: &str) -> Result<Vec<Atom>> {
    let chars: Vec<char> = src.chars().collect();
    let mut atoms: Vec<Atom> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\\' => {
                let next = *chars.get(i + 1).ok_or_else(|| bad(src, "trailing backslash"))?;
                let set = if next == 'd' {
                    CharSet::Ranges(vec![('0', '9')])
                } else {
                    CharSet::Literal(next)
                };
                atoms.push(Atom { set, min: 1, max: 1 });
                i += 2;
            }
            '[' => {
                let close = chars[i + 1..]
                    .iter()
                    .position(|&c| c == ']')
                    .ok_or_else(|| bad(src, "unclosed character class"))?
                    + i
                    + 1;
                let body = &chars[i + 1..close];
                if body.is_empty() {
                    return Err(bad(src, "empty character class"));
                }
                let mut ranges = Vec::new();
                let mut j = 0;
                while j < body.len() {
                    if j + 2 < body.len() && body[j + 1] == '-' {
                        if body[j] > body[j + 2] {
                            return Err(bad(src, format!("reversed range {}-{}", body[j], body[j + 2])));
                        }
                        ranges.push((body[j], body[j + 2]));
                        j += 3;
                    } else {
                        ranges.push((body[j], body[j]));
                        j += 1;
                    }
                }
                atoms.push(Atom {
                    set: CharSet::Ranges(ranges),
                    min: 1,
                    max: 1,
                });
                i = close + 1;
            }
            '{' => {
                let close = chars[i + 1..]
                    .iter()
                    .position(|&c| c == '}')
                    .ok_or_else(|| bad(src, "unclosed quantifier"))?
                    + i
                    + 1;
                let body: String = chars[i + 1..close].iter().collect();
                let (min, max) = match body.split_once(',') {
                    Some((a, b)) => (a.trim().parse::<u32>(), b.trim().parse::<u32>()),
                    None => (body.trim().parse::<u32>(), body.trim().parse::<u32>()),
                };
                let (min, max) = match (min, max) {
                    (Ok(a), Ok(b)) if a <= b && b <= 64 => (a, b),
                    _ => return Err(bad(src, format!("bad quantifier {{{body}}}"))),
                };
                let last = atoms.last_mut().ok_or_else(|| bad(src, "quantifier without an atom"))?;
                if (last.min, last.max) != (1, 1) {
                    return Err(bad(src, "stacked quantifiers"));
                }
                last.min = min;
                last.max = max;
                i = close + 1;
            }
            ']' | '}' => return Err(bad(src, format!("unbalanced `{c}`"))),
            _ => {
                atoms.push(Atom {
                    set: CharSet::Literal(c),
                    min: 1,
                    max: 1,
                });
                i += 1;
            }
        }
    }
    Ok(atoms)
}

fn parse_date_fields(fmt: &str) -> Vec<DateField> {
    const TOKENS: [(&str, DateField); 7] = [
        ("MonthName", DateField::MonthName),
        ("YYYY", DateField::Year4),
        ("YY", DateField::Year2),
        ("MM", DateField::Month2),
        ("DD", DateField::Day2),
        ("M", DateField::Month),
        ("D", DateField::Day),
    ];
    let mut out = Vec::new();
    let mut rest = fmt;
    'outer: while let Some(c) = rest.chars().next() {
        for (tok, field) in TOKENS {
            if let Some(r) = rest.strip_prefix(tok) {
                out.push(field);
                rest = r;
                continue 'outer;
            }
        }
        out.push(DateField::Lit(c));
        rest = &rest[c.len_utf8()..];
    }
    out
}

fn date_regex(fields: &[DateField]) -> String {
    fields
        .iter()
        .map(|f| match f {
            DateField::Year4 => r"(\d{4})".to_string(),
            DateField::Year2 => r"(\d{2})".to_string(),
            DateField::Month2 => "(0[1-9]|1[0-2])".to_string(),
            DateField::Month => "([1-9]|1[0-2])".to_string(),
            DateField::Day2 => "(0[1-9]|[12][0-9]|3[01])".to_string(),
            DateField::Day => "([1-9]|[12][0-9]|3[01])".to_string(),
            DateField::MonthName => format!("({})", MONTHS.join("|")),
            DateField::Lit(c) => regex::escape(&c.to_string()),
        })
        .collect()
}

fn render_date(fields: &[DateField], d: NaiveDate) -> String {
    let mut s = String::new();
    for f in fields {
        match f {
            DateField::Year4 => s.push_str(&format!("{:04}", d.year())),
            DateField::Year2 => s.push_str(&format!("{:02}", d.year().rem_euclid(100))),
            DateField::Month2 => s.push_str(&format!("{:02}", d.month())),
            DateField::Month => s.push_str(&d.month().to_string()),
            DateField::Day2 => s.push_str(&format!("{:02}", d.day())),
            DateField::Day => s.push_str(&d.day().to_string()),
            DateField::MonthName => s.push_str(MONTHS[d.month0() as usize]),
            DateField::Lit(c) => s.push(*c),
        }
    }
    s
}

/// Read back a date rendered with `fields`; `None` unless it names a real day.
fn parse_date(fields: &[DateField], re: &Regex, s: &str) -> Option<NaiveDate> {
    let caps = re.captures(s)?;
    let (mut year, mut month, mut day) = (2000i32, 1u32, 1u32);
    let mut group = 1;
    for f in fields {
        if matches!(f, DateField::Lit(_)) {
            continue;
        }
        let text = caps.get(group)?.as_str();
        group += 1;
        match f {
            DateField::Year4 => year = text.parse().ok()?,
            DateField::Year2 => {
                let yy: i32 = text.parse().ok()?;
                year = if yy >= 50 { 1900 + yy } else { 2000 + yy };
            }
            DateField::Month2 | DateField::Month => month = text.parse().ok()?,
            DateField::Day2 | DateField::Day => day = text.parse().ok()?,
            DateField::MonthName => month = MONTHS.iter().position(|m| *m == text)? as u32 + 1,
            DateField::Lit(_) => {}
        }
    }
    NaiveDate::from_ymd_opt(year, month, day)
}
