//! Sensor deployment: homogeneous Poisson point process sampling over a
//! rectangular region of interest and assignment of nodes to grid clusters.

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::float::Float;
use crate::quad::Rect;

/// Planar point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: Float> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Point<F>) -> F {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Rectangular region of interest tiled by an identical grid of clusters.
///
/// Cluster cells are half-open on their top/right edges so every point of the
/// (half-open) region belongs to exactly one cell. Cells are indexed
/// row-major: index = row * grid_cols + col.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionLayout<F> {
    width: F,
    height: F,
    grid_rows: usize,
    grid_cols: usize,
    ch_positions: Vec<Point<F>>,
}

impl<F: Float> RegionLayout<F> {
    /// Build a layout; cluster-head positions default to the cell centroids.
    ///
    /// The heads never enter any received-signal equation (channels are
    /// parameterized by noise variances directly); they exist for reporting.
    pub fn new(width: F, height: F, grid_rows: usize, grid_cols: usize) -> Result<Self> {
        if !(width > F::zero()) || !(height > F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "region dimensions must be positive, got {} x {}",
                width, height
            )));
        }
        if grid_rows == 0 || grid_cols == 0 {
            return Err(Error::InvalidArgument(
                "grid must have at least one row and one column".into(),
            ));
        }
        let half = F::of(0.5);
        let cell_w = width / F::of_usize(grid_cols);
        let cell_h = height / F::of_usize(grid_rows);
        let mut ch_positions = Vec::with_capacity(grid_rows * grid_cols);
        for row in 0..grid_rows {
            for col in 0..grid_cols {
                ch_positions.push(Point::new(
                    (F::of_usize(col) + half) * cell_w,
                    (F::of_usize(row) + half) * cell_h,
                ));
            }
        }
        Ok(Self {
            width,
            height,
            grid_rows,
            grid_cols,
            ch_positions,
        })
    }

    pub fn width(&self) -> F {
        self.width
    }

    pub fn height(&self) -> F {
        self.height
    }

    pub fn grid_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> usize {
        self.grid_cols
    }

    /// Number of clusters `M`.
    pub fn num_clusters(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn area(&self) -> F {
        self.width * self.height
    }

    pub fn cluster_area(&self) -> F {
        (self.width / F::of_usize(self.grid_cols)) * (self.height / F::of_usize(self.grid_rows))
    }

    pub fn ch_positions(&self) -> &[Point<F>] {
        &self.ch_positions
    }

    pub fn contains(&self, p: &Point<F>) -> bool {
        p.x >= F::zero() && p.x < self.width && p.y >= F::zero() && p.y < self.height
    }

    /// Bounding rectangle of cluster `index`.
    pub fn cluster_rect(&self, index: usize) -> Rect<F> {
        assert!(index < self.num_clusters(), "cluster index out of range");
        let row = index / self.grid_cols;
        let col = index % self.grid_cols;
        let cell_w = self.width / F::of_usize(self.grid_cols);
        let cell_h = self.height / F::of_usize(self.grid_rows);
        Rect {
            x0: F::of_usize(col) * cell_w,
            y0: F::of_usize(row) * cell_h,
            x1: F::of_usize(col + 1) * cell_w,
            y1: F::of_usize(row + 1) * cell_h,
        }
    }
}

/// One realization of the sensor deployment.
#[derive(Debug, Clone)]
pub struct SensorField<F> {
    pub positions: Vec<Point<F>>,
}

impl<F> SensorField<F> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Draw a homogeneous PPP over the region: `N ~ Pois(λ |A|)` nodes placed
/// uniformly i.i.d.
///
/// Sampling consumes the stream identically for every scalar type (draws are
/// made in `f64` and narrowed).
pub fn sample_ppp<F: Float, R: Rng + ?Sized>(
    intensity: F,
    region: &RegionLayout<F>,
    rng: &mut R,
) -> Result<SensorField<F>> {
    if intensity < F::zero() {
        return Err(Error::InvalidArgument(format!(
            "intensity must be non-negative, got {intensity}"
        )));
    }
    let mean = (intensity * region.area()).as_f64();
    if mean == 0.0 {
        return Ok(SensorField { positions: Vec::new() });
    }
    let count = rand_distr::Poisson::new(mean)
        .map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))?
        .sample(rng) as usize;

    let w = region.width().as_f64();
    let h = region.height().as_f64();
    let positions = (0..count)
        .map(|_| {
            let x = rng.random::<f64>() * w;
            let y = rng.random::<f64>() * h;
            Point::new(F::of(x), F::of(y))
        })
        .collect();
    Ok(SensorField { positions })
}

/// Row-major index of the half-open grid cell containing `point`.
pub fn cluster_of<F: Float>(point: &Point<F>, region: &RegionLayout<F>) -> Result<usize> {
    if !region.contains(point) {
        return Err(Error::OutOfRegion {
            x: point.x.as_f64(),
            y: point.y.as_f64(),
        });
    }
    let cols = region.grid_cols();
    let rows = region.grid_rows();
    // The min() guards against x/cell_w rounding up to the cell count for
    // points just inside the far edge.
    let col = ((point.x / (region.width() / F::of_usize(cols)))
        .floor()
        .to_usize()
        .unwrap_or(0))
    .min(cols - 1);
    let row = ((point.y / (region.height() / F::of_usize(rows)))
        .floor()
        .to_usize()
        .unwrap_or(0))
    .min(rows - 1);
    Ok(row * cols + col)
}

/// Number of field points falling in each cluster.
pub fn count_by_cluster<F: Float>(
    field: &SensorField<F>,
    region: &RegionLayout<F>,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; region.num_clusters()];
    for p in &field.positions {
        counts[cluster_of(p, region)?] += 1;
    }
    Ok(counts)
}
