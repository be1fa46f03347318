use std::collections::HashMap;

use crate::mesh::Mesh;
use crate::par::Execution;

/// Gaussian kernel with standard deviation `l`, cut off at `3 l`.
pub fn kernel(distance: f64, l: f64) -> f64 {
    if distance > 3.0 * l {
        0.0
    } else {
        (-distance * distance / (2.0 * l * l)).exp()
    }
}

/// Precomputed, per-target normalized averaging weights between element
/// centroids.
#[derive(Debug, Clone)]
pub struct NonlocalAverager {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl NonlocalAverager {
    pub fn new(mesh: &Mesh, l: f64, execution: Execution) -> Self {
        let centroids: Vec<[f64; 2]> = mesh.geometry().iter().map(|g| g.centroid).collect();
        let areas: Vec<f64> = mesh.geometry().iter().map(|g| g.area).collect();
        let cutoff = 3.0 * l;
        let cell = |p: [f64; 2]| ((p[0] / cutoff).floor() as i64, (p[1] / cutoff).floor() as i64);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, &c) in centroids.iter().enumerate() {
            buckets.entry(cell(c)).or_default().push(i);
        }

        let rows = execution.map_range(centroids.len(), |i| {
            let ci = centroids[i];
            let (bx, by) = cell(ci);
            let mut row = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(list) = buckets.get(&(bx + dx, by + dy)) else { continue };
                    for &j in list {
                        let cj = centroids[j];
                        let d = ((ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2)).sqrt();
                        if j == i || d <= cutoff {
                            row.push((j, kernel(d, l) * areas[j]));
                        }
                    }
                }
            }
            row.sort_unstable_by_key(|&(j, _)| j);
            let total: f64 = row.iter().map(|&(_, w)| w).sum();
            row.iter_mut().for_each(|(_, w)| *w /= total);
            row
        });

        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in rows {
            for (j, w) in row {
                neighbors.push(j);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Self { offsets, neighbors, weights }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(neighbor, weight)` pairs of target `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    /// Written as a weighted sum of differences so a constant field is
    /// reproduced bit for bit.
    pub fn average(&self, field: &[f64], execution: Execution) -> Vec<f64> {
        execution.map_range(self.len(), |i| field[i] + self.row(i).map(|(j, w)| w * (field[j] - field[i])).sum::<f64>())
    }
}
