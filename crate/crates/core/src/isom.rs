//! Incremental self-organizing map vector quantizer.
//!
//! Image planes are cut into non-overlapping square blocks, and a codebook of
//! block-sized codewords is trained with a 1-D chain SOM that grows by
//! splitting its worst node between training rounds:
//!
//! 1. seed `initial_nodes` codewords from distinct training blocks;
//! 2. each round runs `epochs_per_round` shuffled passes of the SOM update
//!    `w_j += alpha * h(j, bmu) * (x - w_j)`, with a Gaussian neighborhood on
//!    chain distance and linear decay of `alpha` and the radius within the round;
//! 3. after a round, if the mean distortion is above the target and the cap
//!    allows it, the node with the largest accumulated error is split in two
//!    adjacent chain positions.
//!
//! A short schedule with a wide neighborhood can drag a node off its cluster,
//! so the chain with the lowest distortion seen (the seed chain or the chain
//! at any round boundary) is the one returned.
//!
//! Training is sequential and fully determined by `rng_seed`.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::{crop, pad_replicate, Image};

/// Non-overlapping square tiles of a plane, flattened row-major, in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSet {
    /// Zero for untiled training sets built by [`BlockSet::from_training_vectors`].
    block_edge: usize,
    dim: usize,
    data: Vec<f64>,
    grid_cols: usize,
    grid_rows: usize,
    source_width: usize,
    source_height: usize,
}

impl BlockSet {
    /// Builds a block set from explicit vectors laid out on a `cols` x `rows` grid.
    pub fn from_vectors(
        block_edge: usize,
        vectors: &[Vec<f64>],
        grid: (usize, usize),
        source_geometry: (usize, usize),
    ) -> Result<Self> {
        let dim = block_edge * block_edge;
        let (cols, rows) = grid;
        if block_edge == 0 || vectors.len() != cols * rows {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks for a {cols}x{rows} grid",
                vectors.len()
            )));
        }
        let (sw, sh) = source_geometry;
        if sw == 0 || sh == 0 || sw > cols * block_edge || sh > rows * block_edge {
            return Err(Error::ShapeMismatch(format!(
                "source {sw}x{sh} does not fit a {cols}x{rows} grid of {block_edge}-blocks"
            )));
        }
        let mut data = Vec::with_capacity(dim * vectors.len());
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::ShapeMismatch("non-finite block entry".into()));
            }
            data.extend_from_slice(v);
        }
        Ok(Self {
            block_edge,
            dim,
            data,
            grid_cols: cols,
            grid_rows: rows,
            source_width: sw,
            source_height: sh,
        })
    }

    /// Untiled training vectors of dimension `dim`. These sets can be trained on
    /// and quantized but not reassembled into a plane.
    pub fn from_training_vectors(dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let mut data = Vec::with_capacity(dim * vectors.len());
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            data.extend_from_slice(v);
        }
        Ok(Self {
            block_edge: 0,
            dim,
            data,
            grid_cols: vectors.len(),
            grid_rows: 1,
            source_width: vectors.len(),
            source_height: 1,
        })
    }

    pub fn block_edge(&self) -> usize {
        self.block_edge
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.grid_cols, self.grid_rows)
    }

    pub fn source_geometry(&self) -> (usize, usize) {
        (self.source_width, self.source_height)
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim())
    }
}

/// Cuts `plane` into `block_edge`-sized tiles after edge-replicating it to a
/// multiple of the block edge.
pub fn extract_blocks(plane: &Image, block_edge: usize) -> Result<BlockSet> {
    if block_edge == 0 {
        return Err(Error::InvalidConfig("block edge must be >= 1".into()));
    }
    let padded = pad_replicate(plane, block_edge);
    let cols = padded.width() / block_edge;
    let rows = padded.height() / block_edge;
    let mut data = Vec::with_capacity(padded.samples().len());
    for by in 0..rows {
        for bx in 0..cols {
            for y in 0..block_edge {
                let start = (by * block_edge + y) * padded.width() + bx * block_edge;
                data.extend_from_slice(&padded.samples()[start..start + block_edge]);
            }
        }
    }
    Ok(BlockSet {
        block_edge,
        dim: block_edge * block_edge,
        data,
        grid_cols: cols,
        grid_rows: rows,
        source_width: plane.width(),
        source_height: plane.height(),
    })
}

/// Places tiles back on the grid and crops to the source geometry.
pub fn reassemble_blocks(set: &BlockSet) -> Result<Image> {
    let edge = set.block_edge;
    if edge == 0 || set.len() != set.grid_cols * set.grid_rows {
        return Err(Error::ShapeMismatch(
            "block set is not a tiled plane".into(),
        ));
    }
    tile(
        (0..set.len()).map(|i| set.block(i)),
        edge,
        (set.grid_cols, set.grid_rows),
        (set.source_width, set.source_height),
    )
}

fn tile<'a>(
    blocks: impl Iterator<Item = &'a [f64]>,
    edge: usize,
    (cols, rows): (usize, usize),
    (sw, sh): (usize, usize),
) -> Result<Image> {
    let w = cols * edge;
    let h = rows * edge;
    if w == 0 || h == 0 {
        return Err(Error::ShapeMismatch("empty block grid".into()));
    }
    let mut out = vec![0.0; w * h];
    for (i, b) in blocks.enumerate() {
        let (bx, by) = (i % cols, i / cols);
        for y in 0..edge {
            let start = (by * edge + y) * w + bx * edge;
            out[start..start + edge].copy_from_slice(&b[y * edge..(y + 1) * edge]);
        }
    }
    crop(&Image::from_raw(w, h, out), sw, sh).map_err(|_| {
        Error::ShapeMismatch(format!("source {sw}x{sh} exceeds tiled plane {w}x{h}"))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsomConfig {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub epochs_per_round: usize,
    pub rounds: usize,
    pub alpha_start: f64,
    pub alpha_end: f64,
    /// Chain-neighborhood radius at the start of each round; `None` means
    /// `initial_nodes / 2`. Decays linearly to 0 within the round.
    pub radius_start: Option<f64>,
    /// Mean squared error per vector entry below which growth stops.
    pub growth_distortion_target: f64,
    /// Split perturbation, relative to the codeword norm (floored at 1e-6).
    pub split_epsilon: f64,
    pub rng_seed: u64,
}

impl Default for IsomConfig {
    fn default() -> Self {
        Self {
            initial_nodes: 4,
            max_nodes: 64,
            epochs_per_round: 10,
            rounds: 6,
            alpha_start: 0.5,
            alpha_end: 0.01,
            radius_start: None,
            growth_distortion_target: 50.0,
            split_epsilon: 1e-3,
            rng_seed: 42,
        }
    }
}

impl IsomConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.initial_nodes == 0 || self.initial_nodes > self.max_nodes {
            return bad("need 1 <= initial_nodes <= max_nodes");
        }
        if self.max_nodes > MAX_CODEWORDS {
            return bad("max_nodes must fit a 16-bit index");
        }
        if !(0.0 < self.alpha_end && self.alpha_end <= self.alpha_start && self.alpha_start < 1.0)
        {
            return bad("need 0 < alpha_end <= alpha_start < 1");
        }
        if self.rounds == 0 || self.epochs_per_round == 0 {
            return bad("rounds and epochs_per_round must be positive");
        }
        if let Some(r) = self.radius_start {
            if !(r >= 0.0 && r.is_finite()) {
                return bad("radius_start must be finite and nonnegative");
            }
        }
        if !(self.split_epsilon >= 0.0 && self.split_epsilon.is_finite()) {
            return bad("split_epsilon must be finite and nonnegative");
        }
        if self.growth_distortion_target.is_nan() {
            return bad("growth_distortion_target is NaN");
        }
        Ok(())
    }

    fn radius(&self) -> f64 {
        self.radius_start
            .unwrap_or(self.initial_nodes as f64 / 2.0)
    }
}

pub const MAX_CODEWORDS: usize = 65535;

#[derive(Debug, Clone, PartialEq)]
pub struct IsomCodebook {
    dim: usize,
    codewords: Vec<Vec<f64>>,
    /// Accumulated squared error per node after the last training round.
    pub node_errors: Vec<f64>,
}

impl IsomCodebook {
    pub fn new(codewords: Vec<Vec<f64>>) -> Result<Self> {
        let dim = codewords.first().map(Vec::len).unwrap_or(0);
        if codewords.is_empty() || codewords.len() > MAX_CODEWORDS || dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "codebook needs 1..={MAX_CODEWORDS} nonempty codewords"
            )));
        }
        for c in &codewords {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("non-finite codeword entry".into()));
            }
        }
        Ok(Self {
            dim,
            codewords,
            node_errors: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[Vec<f64>] {
        &self.codewords
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        &self.codewords[i]
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest codeword and its squared distance. Ties go to the lowest index.
fn nearest(codewords: &[Vec<f64>], v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in codewords.iter().enumerate() {
        let d = sq_dist(c, v);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Best matching unit: index of the nearest codeword in squared Euclidean
/// distance, lowest index on ties.
pub fn bmu(codebook: &IsomCodebook, vector: &[f64]) -> Result<usize> {
    if vector.len() != codebook.dim {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim,
            got: vector.len(),
        });
    }
    Ok(nearest(&codebook.codewords, vector).0)
}

fn check_dims(blocks: &BlockSet, codebook: &IsomCodebook) -> Result<()> {
    if blocks.dim() != codebook.dim {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim,
            got: blocks.dim(),
        });
    }
    Ok(())
}

/// BMU index for every block, in raster order.
pub fn quantize(blocks: &BlockSet, codebook: &IsomCodebook) -> Result<Vec<usize>> {
    check_dims(blocks, codebook)?;
    Ok(blocks
        .iter()
        .map(|b| nearest(&codebook.codewords, b).0)
        .collect())
}

/// Mean over blocks of `|x - codeword(bmu(x))|² / dim`.
pub fn distortion(blocks: &BlockSet, codebook: &IsomCodebook) -> Result<f64> {
    check_dims(blocks, codebook)?;
    if blocks.is_empty() {
        return Ok(0.0);
    }
    Ok(mean_distortion(&codebook.codewords, blocks))
}

fn mean_distortion(codewords: &[Vec<f64>], blocks: &BlockSet) -> f64 {
    let total: f64 = blocks.iter().map(|b| nearest(codewords, b).1).sum();
    total / (blocks.len() * blocks.dim()) as f64
}

/// Tiles codewords back into a plane of `source_geometry`.
pub fn reconstruct(
    indices: &[usize],
    codebook: &IsomCodebook,
    grid: (usize, usize),
    source_geometry: (usize, usize),
    block_edge: usize,
) -> Result<Image> {
    if block_edge * block_edge != codebook.dim {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim,
            got: block_edge * block_edge,
        });
    }
    if indices.len() != grid.0 * grid.1 {
        return Err(Error::ShapeMismatch(format!(
            "{} indices for a {}x{} grid",
            indices.len(),
            grid.0,
            grid.1
        )));
    }
    if let Some(&index) = indices.iter().find(|&&i| i >= codebook.len()) {
        return Err(Error::IndexOutOfRange {
            index,
            size: codebook.len(),
        });
    }
    tile(
        indices.iter().map(|&i| codebook.codewords[i].as_slice()),
        block_edge,
        grid,
        source_geometry,
    )
}

/// Seeds the chain with `n` training blocks, distinct when enough exist.
pub fn initial_codebook(blocks: &BlockSet, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let count = blocks.len();
    if count >= n {
        index::sample(rng, count, n)
            .into_iter()
            .map(|i| blocks.block(i).to_vec())
            .collect()
    } else {
        (0..n)
            .map(|_| blocks.block(rng.random_range(0..count)).to_vec())
            .collect()
    }
}

/// Trains a codebook on `blocks`; see the module docs for the procedure.
pub fn train(blocks: &BlockSet, config: &IsomConfig) -> Result<IsomCodebook> {
    config.validate()?;
    if blocks.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut nodes = initial_codebook(blocks, config.initial_nodes, &mut rng);
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    let steps = config.epochs_per_round * blocks.len();
    let radius0 = config.radius();
    let (mut node_errors, mut total) = node_distortions(blocks, &nodes);
    let mut best = (total, nodes.clone(), node_errors.clone());

    for round in 0..config.rounds {
        let mut t = 0usize;
        for _ in 0..config.epochs_per_round {
            order.shuffle(&mut rng);
            for &bi in &order {
                let frac = if steps > 1 {
                    t as f64 / (steps - 1) as f64
                } else {
                    1.0
                };
                let alpha = config.alpha_start + (config.alpha_end - config.alpha_start) * frac;
                let radius = radius0 * (1.0 - frac);
                t += 1;

                let x = blocks.block(bi);
                let winner = nearest(&nodes, x).0;
                update_chain(&mut nodes, x, winner, alpha, radius);
            }
        }

        (node_errors, total) = node_distortions(blocks, &nodes);
        if total < best.0 {
            best = (total, nodes.clone(), node_errors.clone());
        }
        let mean = total / (blocks.len() * blocks.dim()) as f64;

        let last_round = round + 1 == config.rounds;
        if mean <= config.growth_distortion_target || last_round {
            break;
        }
        if nodes.len() < config.max_nodes {
            split_worst(&mut nodes, &mut node_errors, config.split_epsilon);
        }
    }

    let (_, nodes, node_errors) = best;
    let mut codebook = IsomCodebook::new(nodes)?;
    codebook.node_errors = node_errors;
    Ok(codebook)
}

/// Accumulated squared error per node, and the total.
fn node_distortions(blocks: &BlockSet, nodes: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let mut errors = vec![0.0; nodes.len()];
    let mut total = 0.0;
    for b in blocks.iter() {
        let (j, d) = nearest(nodes, b);
        errors[j] += d;
        total += d;
    }
    (errors, total)
}

fn update_chain(nodes: &mut [Vec<f64>], x: &[f64], winner: usize, alpha: f64, radius: f64) {
    let two_r2 = 2.0 * radius * radius;
    for (j, w) in nodes.iter_mut().enumerate() {
        let h = if j == winner {
            1.0
        } else if two_r2 > 0.0 {
            let d = j as f64 - winner as f64;
            (-(d * d) / two_r2).exp()
        } else {
            0.0
        };
        let rate = alpha * h;
        if rate == 0.0 {
            continue;
        }
        for (wi, xi) in w.iter_mut().zip(x) {
            *wi += rate * (xi - *wi);
        }
    }
}

/// Splits the highest-error node (lowest index on ties): the copy is inserted
/// right after it with `+eps`, the original moves by `-eps`.
fn split_worst(nodes: &mut Vec<Vec<f64>>, node_errors: &mut Vec<f64>, split_epsilon: f64) {
    let mut worst = 0;
    for (j, &e) in node_errors.iter().enumerate() {
        if e > node_errors[worst] {
            worst = j;
        }
    }
    let norm = nodes[worst].iter().map(|v| v * v).sum::<f64>().sqrt();
    let eps = (split_epsilon * norm).max(1e-6);
    let mut copy = nodes[worst].clone();
    copy.iter_mut().for_each(|v| *v += eps);
    nodes[worst].iter_mut().for_each(|v| *v -= eps);
    nodes.insert(worst + 1, copy);
    let half = node_errors[worst] / 2.0;
    node_errors[worst] = half;
    node_errors.insert(worst + 1, half);
}
