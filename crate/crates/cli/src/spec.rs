//! Small command-line value types.

use std::fmt;
use std::str::FromStr;

/// Which options an agent gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionSpec {
    None,
    /// The first N eigenoptions (N/2 eigenvectors, both signs).
    Eigen(usize),
    /// N options to uniformly drawn subgoals.
    Random(usize),
    /// One option per room leading to a doorway.
    Bottleneck,
}

impl OptionSpec {
    /// File-name friendly label.
    pub fn label(self) -> String {
        match self {
            OptionSpec::None => "none".into(),
            OptionSpec::Eigen(n) => format!("eigen{n}"),
            OptionSpec::Random(n) => format!("random{n}"),
            OptionSpec::Bottleneck => "bottleneck".into(),
        }
    }
}

impl fmt::Display for OptionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptionSpec::None => f.write_str("none"),
            OptionSpec::Eigen(n) => write!(f, "eigen:{n}"),
            OptionSpec::Random(n) => write!(f, "random:{n}"),
            OptionSpec::Bottleneck => f.write_str("bottleneck"),
        }
    }
}

impl FromStr for OptionSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let count = |n: &str| n.parse::<usize>().map_err(|_| format!("bad option count {n:?}"));
        match s.split_once(':') {
            None if s == "none" => Ok(OptionSpec::None),
            None if s == "bottleneck" => Ok(OptionSpec::Bottleneck),
            Some(("eigen", n)) => {
                let n = count(n)?;
                if n % 2 != 0 {
                    return Err(format!("eigenoptions come in sign pairs; {n} is odd"));
                }
                Ok(OptionSpec::Eigen(n))
            }
            Some(("random", n)) => Ok(OptionSpec::Random(count(n)?)),
            _ => Err(format!("expected none, bottleneck, eigen:N or random:N, got {s:?}")),
        }
    }
}

/// A grid cell given as `row,col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl FromStr for Cell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (r, c) = s.split_once(',').ok_or_else(|| format!("expected row,col, got {s:?}"))?;
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad coordinate {x:?}"));
        Ok(Cell { row: parse(r)?, col: parse(c)? })
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

/// `start:goal` cell pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub start: Cell,
    pub goal: Cell,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected r,c:r,c, got {s:?}"))?;
        Ok(Task { start: a.parse()?, goal: b.parse()? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn option_specs() {
        assert_eq!("none".parse(), Ok(OptionSpec::None));
        assert_eq!("eigen:64".parse(), Ok(OptionSpec::Eigen(64)));
        assert_eq!("random:8".parse(), Ok(OptionSpec::Random(8)));
        assert_eq!("bottleneck".parse(), Ok(OptionSpec::Bottleneck));
        assert!("eigen:3".parse::<OptionSpec>().is_err());
        assert!("eigen".parse::<OptionSpec>().is_err());
        assert!("eigen:x".parse::<OptionSpec>().is_err());
        for s in ["none", "eigen:4", "random:2", "bottleneck"] {
            assert_eq!(s.parse::<OptionSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn tasks() {
        let t: Task = "11,1:1,11".parse().unwrap();
        assert_eq!((t.start.row, t.start.col, t.goal.row, t.goal.col), (11, 1, 1, 11));
        assert!("1,1".parse::<Task>().is_err());
        assert!("a,1:1,1".parse::<Task>().is_err());
    }
}
