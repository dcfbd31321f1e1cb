//! Query region, virtual block grid and random node deployment.
//!
//! Blocks are half-open squares `[c·side, (c+1)·side) × [r·side, (r+1)·side)`
//! numbered row-major. Points on the far edges of the region are clamped into
//! the last row/column, so every point of the region maps to exactly one block.
//! When the side does not divide the region, the last row/column overhangs the
//! region and is treated as a full block.
//!
//! All randomness comes from ChaCha8 seeded with [`rand::SeedableRng::seed_from_u64`].

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{BlockId, Error, NodeId, Result};

/// Slack for floating-point comparisons on lengths.
const LEN_EPS: f64 = 1e-9;

/// Coordinates are quantised to this many decimal places so the text
/// deployment format round-trips bit-exactly.
const COORD_SCALE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub region_width: f64,
    pub region_height: f64,
    pub rows: usize,
    pub cols: usize,
    pub block_side: f64,
    /// `block_side·√2 ≤ min(S, T)`: any node covers its block and reaches
    /// every other node of the same block.
    pub guarantee_ok: bool,
}

impl Grid {
    /// Number of blocks.
    pub fn m(&self) -> usize {
        self.rows * self.cols
    }

    pub fn block_index(&self, x: f64, y: f64) -> Result<BlockId> {
        block_index(self, x, y)
    }

    /// `(row, col)` of a block.
    pub fn block_coords(&self, b: BlockId) -> (usize, usize) {
        (b / self.cols, b % self.cols)
    }

    /// Part of the block that lies inside the region, as `(x0, y0, x1, y1)`.
    pub fn block_rect(&self, b: BlockId) -> (f64, f64, f64, f64) {
        let (r, c) = self.block_coords(b);
        let x0 = c as f64 * self.block_side;
        let y0 = r as f64 * self.block_side;
        (
            x0,
            y0,
            (x0 + self.block_side).min(self.region_width),
            (y0 + self.block_side).min(self.region_height),
        )
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn guarantee_holds(block_side: f64, s: f64, t: f64) -> bool {
    block_side * std::f64::consts::SQRT_2 <= s.min(t) * (1.0 + LEN_EPS)
}

/// Cells needed to tile `extent` with squares of `side`.
fn cells(extent: f64, side: f64) -> usize {
    ((extent / side) - LEN_EPS).ceil().max(1.0) as usize
}

/// Grid whose block side is `min(S,T)/√2`, the largest side for which the
/// block guarantee holds.
pub fn make_grid_from_ranges(region_w: f64, region_h: f64, s: f64, t: f64) -> Result<Grid> {
    check_positive("region width", region_w)?;
    check_positive("region height", region_h)?;
    check_positive("sensing range", s)?;
    check_positive("transmission range", t)?;
    let block_side = s.min(t) / std::f64::consts::SQRT_2;
    Ok(Grid {
        region_width: region_w,
        region_height: region_h,
        rows: cells(region_h, block_side),
        cols: cells(region_w, block_side),
        block_side,
        guarantee_ok: true,
    })
}

/// Grid with a fixed number of rows and columns. A violated block guarantee
/// is reported through `guarantee_ok`, not as an error.
pub fn make_grid_explicit(region_w: f64, region_h: f64, rows: usize, cols: usize, s: f64, t: f64) -> Result<Grid> {
    check_positive("region width", region_w)?;
    check_positive("region height", region_h)?;
    check_positive("sensing range", s)?;
    check_positive("transmission range", t)?;
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!("grid must be at least 1x1, got {rows}x{cols}")));
    }
    let block_side = (region_w / cols as f64).max(region_h / rows as f64);
    Ok(Grid {
        region_width: region_w,
        region_height: region_h,
        rows,
        cols,
        block_side,
        guarantee_ok: guarantee_holds(block_side, s, t),
    })
}

pub fn block_index(grid: &Grid, x: f64, y: f64) -> Result<BlockId> {
    let inside = (0.0..=grid.region_width).contains(&x) && (0.0..=grid.region_height).contains(&y);
    if !inside {
        return Err(Error::OutOfRange { x, y });
    }
    let col = ((x / grid.block_side).floor() as usize).min(grid.cols - 1);
    let row = ((y / grid.block_side).floor() as usize).min(grid.rows - 1);
    Ok(row * grid.cols + col)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub block: BlockId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub grid: Grid,
    pub nodes: Vec<Node>,
    pub sensing_range: f64,
    pub transmission_range: f64,
    pub seed: u64,
}

impl Deployment {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn block_of(&self, id: NodeId) -> BlockId {
        self.nodes[id].block
    }

    /// Node ids of every block, each list ascending.
    pub fn nodes_per_block(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.grid.m()];
        for node in &self.nodes {
            out[node.block].push(node.id);
        }
        out
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> f64 {
        let (a, b) = (&self.nodes[u], &self.nodes[v]);
        (a.x - b.x).hypot(a.y - b.y)
    }

    /// Serialises to the line-oriented deployment format.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut out = format!(
            "region {} {} grid {} {} S {} T {} seed {}\n",
            g.region_width, g.region_height, g.rows, g.cols, self.sensing_range, self.transmission_range, self.seed
        );
        for n in &self.nodes {
            let _ = writeln!(out, "node {} {:.6} {:.6} {}", n.id, n.x, n.y, n.block);
        }
        out
    }

    /// Parses the deployment format written by [`Deployment::to_text`].
    ///
    /// The header does not carry the block side, so the grid is rebuilt as the
    /// explicit `rows × cols` grid, or as the range-derived grid when that is
    /// the one consistent with every node's recorded block.
    pub fn from_text(text: &str) -> Result<Deployment> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        let expect = ["region", "", "", "grid", "", "", "S", "", "T", "", "seed", ""];
        if tok.len() != expect.len() || expect.iter().zip(&tok).any(|(e, t)| !e.is_empty() && e != t) {
            return Err(Error::parse(
                hline,
                "expected `region <w> <h> grid <rows> <cols> S <S> T <T> seed <seed>`",
            ));
        }
        let num = |i: usize| -> Result<f64> {
            tok[i]
                .parse::<f64>()
                .map_err(|e| Error::parse(hline, format!("bad number `{}`: {e}", tok[i])))
        };
        let int = |i: usize| -> Result<u64> {
            tok[i]
                .parse::<u64>()
                .map_err(|e| Error::parse(hline, format!("bad integer `{}`: {e}", tok[i])))
        };
        let (w, h, s, t) = (num(1)?, num(2)?, num(7)?, num(9)?);
        let (rows, cols, seed) = (int(4)? as usize, int(5)? as usize, int(11)?);

        let mut nodes = Vec::new();
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 || f[0] != "node" {
                return Err(Error::parse(ln, "expected `node <id> <x> <y> <block>`"));
            }
            let bad = |what: &str| Error::parse(ln, format!("bad {what}"));
            let id: NodeId = f[1].parse().map_err(|_| bad("id"))?;
            if id != nodes.len() {
                return Err(Error::parse(
                    ln,
                    format!("node ids must be dense, expected {}", nodes.len()),
                ));
            }
            nodes.push(Node {
                id,
                x: f[2].parse().map_err(|_| bad("x"))?,
                y: f[3].parse().map_err(|_| bad("y"))?,
                block: f[4].parse().map_err(|_| bad("block"))?,
            });
        }

        let consistent = |grid: &Grid| {
            nodes
                .iter()
                .all(|n| block_index(grid, n.x, n.y).map(|b| b == n.block).unwrap_or(false))
        };
        let explicit = make_grid_explicit(w, h, rows, cols, s, t)?;
        let grid = if consistent(&explicit) {
            explicit
        } else {
            match make_grid_from_ranges(w, h, s, t) {
                Ok(g) if g.rows == rows && g.cols == cols && consistent(&g) => g,
                _ => {
                    return Err(Error::parse(
                        hline,
                        "node blocks are inconsistent with the declared grid",
                    ))
                }
            }
        };
        Ok(Deployment {
            grid,
            nodes,
            sensing_range: s,
            transmission_range: t,
            seed,
        })
    }
}

/// Deploys `n` nodes uniformly at random over the region.
///
/// Pure in `(n, grid, s, t, seed)`. Coordinates are truncated to six
/// decimals so that the text format is lossless.
pub fn deploy(n: usize, grid: &Grid, s: f64, t: f64, seed: u64) -> Deployment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quantise = |v: f64| (v * COORD_SCALE).floor() / COORD_SCALE;
    let nodes = (0..n)
        .map(|id| {
            let x = quantise(rng.gen::<f64>() * grid.region_width);
            let y = quantise(rng.gen::<f64>() * grid.region_height);
            let block = block_index(grid, x, y).expect("sampled point lies inside the region");
            Node { id, x, y, block }
        })
        .collect();
    Deployment {
        grid: grid.clone(),
        nodes,
        sensing_range: s,
        transmission_range: t,
        seed,
    }
}

/// Deployment from explicit coordinates, mainly for fixtures.
pub fn deployment_from_points(grid: &Grid, s: f64, t: f64, points: &[(f64, f64)]) -> Result<Deployment> {
    let nodes = points
        .iter()
        .enumerate()
        .map(|(id, &(x, y))| {
            Ok(Node {
                id,
                x,
                y,
                block: block_index(grid, x, y)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Deployment {
        grid: grid.clone(),
        nodes,
        sensing_range: s,
        transmission_range: t,
        seed: 0,
    })
}
