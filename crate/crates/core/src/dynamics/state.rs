use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum Color {
    #[default]
    Uncolored = 0,
    Red = 1,
    Blue = 2,
}

impl Color {
    #[inline]
    pub fn is_colored(self) -> bool {
        self != Color::Uncolored
    }
}

/// Red, blue and uncolored tallies of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub red: usize,
    pub blue: usize,
    pub uncolored: usize,
}

impl Counts {
    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.red, self.blue, self.uncolored)
    }
}

/// Per-node colors with cached counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColorState {
    colors: Vec<Color>,
    red: usize,
    blue: usize,
}

impl ColorState {
    pub fn uncolored(n: usize) -> Self {
        Self {
            colors: vec![Color::Uncolored; n],
            red: 0,
            blue: 0,
        }
    }

    pub fn from_colors(colors: Vec<Color>) -> Self {
        let red = colors.iter().filter(|&&c| c == Color::Red).count();
        let blue = colors.iter().filter(|&&c| c == Color::Blue).count();
        Self { colors, red, blue }
    }

    pub fn from_sets(n: usize, red: &[NodeId], blue: &[NodeId]) -> Result<Self> {
        let mut state = Self::uncolored(n);
        for (nodes, color) in [(red, Color::Red), (blue, Color::Blue)] {
            for &v in nodes {
                if v >= n {
                    return Err(Error::NodeOutOfRange { node: v, n });
                }
                match state.colors[v] {
                    Color::Uncolored => state.set(v, color),
                    c if c == color => {}
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "node {v} listed as both red and blue"
                        )))
                    }
                }
            }
        }
        Ok(state)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.colors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    #[inline]
    pub fn get(&self, v: NodeId) -> Color {
        self.colors[v]
    }

    #[inline]
    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    /// Overwrites the color of `v`, keeping the counts in sync.
    pub fn set(&mut self, v: NodeId, color: Color) {
        match self.colors[v] {
            Color::Red => self.red -= 1,
            Color::Blue => self.blue -= 1,
            Color::Uncolored => {}
        }
        match color {
            Color::Red => self.red += 1,
            Color::Blue => self.blue += 1,
            Color::Uncolored => {}
        }
        self.colors[v] = color;
    }

    pub fn counts(&self) -> Counts {
        Counts {
            red: self.red,
            blue: self.blue,
            uncolored: self.colors.len() - self.red - self.blue,
        }
    }

    #[inline]
    pub fn red_count(&self) -> usize {
        self.red
    }

    #[inline]
    pub fn blue_count(&self) -> usize {
        self.blue
    }

    pub fn nodes_with(&self, color: Color) -> Vec<NodeId> {
        (0..self.len()).filter(|&v| self.colors[v] == color).collect()
    }

    /// The state with every node of `seeds` recolored red. Seeds must not be
    /// blue; seeds that are already red are left alone.
    pub fn with_red(&self, seeds: &[NodeId]) -> Result<Self> {
        let mut s = self.clone();
        for &v in seeds {
            if v >= s.len() {
                return Err(Error::NodeOutOfRange { node: v, n: s.len() });
            }
            match s.colors[v] {
                Color::Blue => return Err(Error::BlueOverlap(v)),
                Color::Uncolored => s.set(v, Color::Red),
                Color::Red => {}
            }
        }
        Ok(s)
    }
}

/// Reads a state file:
///
/// ```text
/// # comment
/// nodes 6
/// red 0 3
/// blue 5
/// ```
///
/// Nodes not listed are uncolored. `nodes` is optional; when present it
/// must equal `n`.
pub fn read_state<R: BufRead>(reader: R, n: usize) -> Result<ColorState> {
    let mut red = Vec::new();
    let mut blue = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut words = trimmed.split_whitespace();
        let key = words.next().unwrap_or_default();
        let ids = words
            .map(|w| {
                w.parse::<usize>()
                    .map_err(|_| Error::parse(lineno, format!("bad node id {w:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match key {
            "red" => red.extend(ids),
            "blue" => blue.extend(ids),
            "nodes" => {
                if ids.as_slice() != [n] {
                    return Err(Error::parse(
                        lineno,
                        format!("state declares {ids:?} nodes, graph has {n}"),
                    ));
                }
            }
            other => return Err(Error::parse(lineno, format!("unknown key {other:?}"))),
        }
    }
    ColorState::from_sets(n, &red, &blue)
}

pub fn write_state<W: Write>(state: &ColorState, mut out: W) -> Result<()> {
    writeln!(out, "nodes {}", state.len())?;
    for (key, color) in [("red", Color::Red), ("blue", Color::Blue)] {
        write!(out, "{key}")?;
        for v in state.nodes_with(color) {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
