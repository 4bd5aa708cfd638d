//! Process identifiers and message tags.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Compares two identifiers chunk-wise, treating digit runs as numbers, so
/// that `p2 < p10` and `p1.2 < p1.10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut xs, mut ys) = (Chunks(a), Chunks(b));
    loop {
        match (xs.next(), ys.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => {
                let ord = match (is_digits(x), is_digits(y)) {
                    (true, true) => {
                        let (x, y) = (x.trim_start_matches('0'), y.trim_start_matches('0'));
                        x.len().cmp(&y.len()).then_with(|| x.cmp(y))
                    }
                    _ => x.cmp(y),
                };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
        }
    }
}

fn is_digits(s: &str) -> bool {
    s.as_bytes()[0].is_ascii_digit()
}

struct Chunks<'a>(&'a str);

impl<'a> Iterator for Chunks<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        let s = self.0;
        let first = s.chars().next()?;
        let digit = first.is_ascii_digit();
        let end = s
            .char_indices()
            .find(|(_, c)| c.is_ascii_digit() != digit)
            .map_or(s.len(), |(i, _)| i);
        self.0 = &s[end..];
        Some(&s[..end])
    }
}

fn valid_base(s: &str) -> Option<&str> {
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, c)) if c.is_ascii_lowercase() => {}
        _ => return None,
    }
    let end = chars
        .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
        .map_or(s.len(), |(i, _)| i);
    Some(&s[end..])
}

fn valid_suffixes(mut rest: &str) -> &str {
    while let Some(r) = rest.strip_prefix('.') {
        let n = r.bytes().take_while(u8::is_ascii_digit).count();
        if n == 0 {
            return rest;
        }
        rest = &r[n..];
    }
    rest
}

/// `name(.k)*`, e.g. `p1`, `p1.2.1`.
pub fn is_valid_pid(s: &str) -> bool {
    valid_base(s).map(valid_suffixes) == Some("")
}

/// `name(.k)*(#k)?`, e.g. `l3`, `p1.2#1`.
pub fn is_valid_tag(s: &str) -> bool {
    let Some(rest) = valid_base(s).map(valid_suffixes) else {
        return false;
    };
    match rest.strip_prefix('#') {
        None => rest.is_empty(),
        Some(n) => !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()),
    }
}

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl Ord for $name {
            fn cmp(&self, other: &Self) -> Ordering {
                natural_cmp(&self.0, &other.0).then_with(|| self.0.cmp(&other.0))
            }
        }

        impl PartialOrd for $name {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

name_type!(
    /// A process identifier. Simulator runs use hierarchical names: the root
    /// is `p1` and the k-th process spawned by `q` is `q.k`.
    Pid
);
name_type!(
    /// A message tag. Simulator runs name the k-th message sent by `q` as
    /// `q#k`; files may use any literal such as `l1`.
    Tag
);

impl Pid {
    /// Panics on malformed names; use [`Pid::parse`] for untrusted input.
    pub fn new(s: &str) -> Pid {
        Pid::parse(s).unwrap_or_else(|| panic!("malformed pid `{s}`"))
    }

    pub fn parse(s: &str) -> Option<Pid> {
        is_valid_pid(s).then(|| Pid(s.into()))
    }

    pub fn root() -> Pid {
        Pid("p1".into())
    }

    /// The pid of the `k`-th (1-based) process spawned by `self`.
    pub fn child(&self, k: usize) -> Pid {
        Pid(format!("{}.{k}", self.0).into())
    }

    /// The tag of the `k`-th (1-based) message sent by `self`.
    pub fn message(&self, k: usize) -> Tag {
        Tag(format!("{}#{k}", self.0).into())
    }
}

impl Tag {
    pub fn new(s: &str) -> Tag {
        Tag::parse(s).unwrap_or_else(|| panic!("malformed tag `{s}`"))
    }

    pub fn parse(s: &str) -> Option<Tag> {
        is_valid_tag(s).then(|| Tag(s.into()))
    }
}
