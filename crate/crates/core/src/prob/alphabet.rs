use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, finite set of symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::invalid("alphabet must contain at least one symbol"));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::invalid(format!("duplicate alphabet label {l:?}")));
            }
        }
        Ok(Alphabet { labels })
    }

    /// Alphabet labelled `"0"`, `"1"`, ..., `"n-1"`.
    pub fn indexed(n: usize) -> Result<Self> {
        Alphabet::new((0..n).map(|i| i.to_string()))
    }

    /// Cartesian product in row-major order, labels joined with `|`.
    pub fn product(parts: &[&Alphabet]) -> Result<Self> {
        if parts.is_empty() {
            return Alphabet::new(["()"]);
        }
        if parts.len() == 1 {
            return Ok(parts[0].clone());
        }
        let mut labels = vec![String::new()];
        for (k, a) in parts.iter().enumerate() {
            let mut next = Vec::with_capacity(labels.len() * a.size());
            for prefix in &labels {
                for l in &a.labels {
                    if k == 0 {
                        next.push(l.clone());
                    } else {
                        next.push(format!("{prefix}|{l}"));
                    }
                }
            }
            labels = next;
        }
        Alphabet::new(labels)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Alphabet::new(labels)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.labels
    }
}

/// Role of an axis in a joint distribution.
///
/// `Both` marks an attribute that is simultaneously revealed and hidden
/// (the census / data-mining setting).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Private,
    Public,
    Both,
    SideInfo,
    Auxiliary,
    Reconstruction,
}

impl Role {
    pub fn is_private(self) -> bool {
        matches!(self, Role::Private | Role::Both)
    }

    pub fn is_public(self) -> bool {
        matches!(self, Role::Public | Role::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Private => "private",
            Role::Public => "public",
            Role::Both => "both",
            Role::SideInfo => "side-info",
            Role::Auxiliary => "auxiliary",
            Role::Reconstruction => "reconstruction",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "private" => Role::Private,
            "public" => Role::Public,
            "both" => Role::Both,
            "side-info" => Role::SideInfo,
            "auxiliary" => Role::Auxiliary,
            "reconstruction" => Role::Reconstruction,
            other => return Err(Error::invalid(format!("unknown role {other:?}"))),
        })
    }
}

/// A named, role-tagged alphabet: one dimension of a joint distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub role: Role,
    #[serde(rename = "labels")]
    pub alphabet: Alphabet,
}

impl Axis {
    pub fn new(name: impl Into<String>, role: Role, alphabet: Alphabet) -> Self {
        Axis {
            name: name.into(),
            role,
            alphabet,
        }
    }

    pub fn size(&self) -> usize {
        self.alphabet.size()
    }
}
