use super::{is_upper, partner, CodeConstruction};
use crate::error::{Error, Result};
use crate::matrix::{check_congruent, Block, PartitionedMatrix};

/// Encodes the data blocks of `data` into `N` worker blocks.
pub fn encode(construction: &CodeConstruction, data: &PartitionedMatrix) -> Result<Vec<Block>> {
    encode_blocks(construction, &data.blocks)
}

pub fn encode_blocks(construction: &CodeConstruction, data: &[Block]) -> Result<Vec<Block>> {
    encode_counted(construction, data).map(|(out, _)| out)
}

/// Encodes and also returns the number of block additions performed,
/// which is always `(N / 2) * log2 N`.
pub fn encode_counted(construction: &CodeConstruction, data: &[Block]) -> Result<(Vec<Block>, usize)> {
    if data.len() != construction.n_data() {
        return Err(Error::Validation(format!(
            "{} data blocks for {} data channels",
            data.len(),
            construction.n_data()
        )));
    }
    check_congruent(data)?;
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("data blocks must be finite".into()));
    }

    let n = construction.n_workers();
    let zero = Block::zeros(data[0].dim());
    let mut nodes = vec![zero; n];
    for (&channel, block) in construction.data_set().iter().zip(data) {
        nodes[channel] = block.clone();
    }

    let mut additions = 0;
    for level in 0..construction.levels() {
        for i in (0..n).filter(|&i| is_upper(i, level)) {
            let p = partner(i, level);
            let (head, tail) = nodes.split_at_mut(p);
            head[i] += &tail[0];
            additions += 1;
        }
    }
    Ok((nodes, additions))
}

/// `G[w][i]` is the coefficient of input channel `i` in worker `w`'s coded
/// block, found by pushing each unit input through the encoder.
pub fn generator_matrix(n_workers: usize) -> Result<Vec<Vec<f64>>> {
    let levels = super::log2_exact(n_workers)?;
    let mut g = vec![vec![0.0; n_workers]; n_workers];
    for input in 0..n_workers {
        let mut v = vec![0.0; n_workers];
        v[input] = 1.0;
        for level in 0..levels {
            for i in (0..n_workers).filter(|&i| is_upper(i, level)) {
                v[i] += v[partner(i, level)];
            }
        }
        for (w, coeff) in v.into_iter().enumerate() {
            g[w][input] = coeff;
        }
    }
    Ok(g)
}
