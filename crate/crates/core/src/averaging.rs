//! Collapsing each partition block of an FFL image to its mean location.

use crate::error::{Error, Result};
use crate::lattice::EmitterField;
use crate::localization::FflImage;
use crate::metric::{msmd_accelerated, nearest_all, SpatialIndex};
use crate::point::{PointSet, Space};

/// Which partition of `X` the blocks were taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    /// The true source emitter of each point.
    Oracle,
    /// The Voronoi cell of the nearest emitter.
    Voronoi,
}

/// One mean location per non-empty block.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedImage {
    pub points: PointSet,
    /// Emitter id of each averaged point; same order as `points`.
    pub kept_emitters: Vec<usize>,
    pub partition_used: Partition,
}

/// Averages each emitter's block using the stored source indices.
pub fn average_oracle(image: &FflImage) -> Result<AveragedImage> {
    average_blocks(image, &image.source_index, Partition::Oracle)
}

/// Averages the points falling in each emitter's Voronoi cell (minimum-image
/// distance, ties to the lower index). Empty cells produce no point.
pub fn average_voronoi(image: &FflImage) -> Result<AveragedImage> {
    let space = image.field.space();
    let index = SpatialIndex::build(&space, image.field.emitters(), image.field.backend());
    let (owner, _) = nearest_all(&index, &image.points);
    average_blocks(image, &owner, Partition::Voronoi)
}

fn average_blocks(image: &FflImage, owner: &[usize], partition: Partition) -> Result<AveragedImage> {
    if image.points.is_empty() {
        return Err(Error::EmptyImage);
    }
    let m = image.field.len();
    let dim = image.points.dim();
    let space = image.field.space();

    // first point of each block anchors the minimum-image unwrap
    let mut anchor: Vec<Option<usize>> = vec![None; m];
    let mut sums = vec![0.0; m * dim];
    let mut counts = vec![0usize; m];
    for (j, (p, &i)) in image.points.iter().zip(owner).enumerate() {
        let a = *anchor[i].get_or_insert(j);
        let base = image.points.get(a);
        for k in 0..dim {
            sums[i * dim + k] += space.delta(p[k], base[k], k);
        }
        counts[i] += 1;
    }

    let mut points = PointSet::empty(dim)?;
    let mut kept = Vec::new();
    let mut mean = vec![0.0; dim];
    for i in 0..m {
        let Some(a) = anchor[i] else { continue };
        let base = image.points.get(a);
        for k in 0..dim {
            let offset = sums[i * dim + k] / counts[i] as f64;
            mean[k] = space.wrap_coord(base[k] + offset, k);
        }
        points.push(&mean)?;
        kept.push(i);
    }
    Ok(AveragedImage {
        points,
        kept_emitters: kept,
        partition_used: partition,
    })
}

/// RMSMD between a point set and the field's emitters.
pub fn rmsmd_to_field(points: &PointSet, field: &EmitterField) -> Result<f64> {
    let space: Space = field.space();
    Ok(msmd_accelerated(&space, points, field.emitters(), field.backend())?.rmsmd())
}

/// Fold of improvement `D(X, S) / D(X̂, S)`.
pub fn improvement_fold(
    image: &FflImage,
    averaged: &AveragedImage,
    field: &EmitterField,
) -> Result<f64> {
    let raw = rmsmd_to_field(&image.points, field)?;
    let avg = rmsmd_to_field(&averaged.points, field)?;
    if avg == 0.0 {
        return Err(Error::DegenerateImage);
    }
    Ok(raw / avg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationCounts;
    use crate::lattice::{build_lattice, Region};
    use crate::localization::{synthesize_ffl, ErrorModel};

    fn image(points: &[(f64, f64)], source: Vec<usize>, field: &EmitterField) -> FflImage {
        FflImage {
            points: PointSet::from_xy(points).unwrap(),
            source_index: source,
            field: field.clone(),
            realized_biases: vec![vec![0.0, 0.0]; field.len()],
            drift: vec![0.0, 0.0],
        }
    }

    fn box_field(s: &[(f64, f64)]) -> EmitterField {
        let region = Region::Box {
            lower: vec![-1000.0, -1000.0],
            upper: vec![1000.0, 1000.0],
        };
        EmitterField::irregular(PointSet::from_xy(s).unwrap(), region).unwrap()
    }

    #[test]
    fn arithmetic_mean_of_block() {
        let f = box_field(&[(0.0, 0.0)]);
        let img = image(&[(0.0, 0.0), (2.0, 0.0), (4.0, 0.0)], vec![0, 0, 0], &f);
        let avg = average_oracle(&img).unwrap();
        assert_eq!(avg.points.get(0), &[2.0, 0.0]);
        assert_eq!(avg.kept_emitters, vec![0]);
        assert_eq!(avg.partition_used, Partition::Oracle);
    }

    #[test]
    fn singletons_average_to_themselves() {
        let f = build_lattice(200.0, 4, 4).unwrap();
        let counts = ActivationCounts::from_counts(vec![1; 16], 1.0);
        let img = synthesize_ffl(&f, &counts, &ErrorModel::isotropic(20.0), 3).unwrap();
        let avg = average_oracle(&img).unwrap();
        assert_eq!(avg.points, img.points);
    }

    #[test]
    fn empty_blocks_are_dropped() {
        let f = box_field(&[(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)]);
        let img = image(&[(1.0, 0.0), (201.0, 0.0)], vec![0, 2], &f);
        let avg = average_oracle(&img).unwrap();
        assert_eq!(avg.kept_emitters, vec![0, 2]);
        let none = image(&[], vec![], &f);
        assert_eq!(average_oracle(&none), Err(Error::EmptyImage));
        assert_eq!(average_voronoi(&none), Err(Error::EmptyImage));
    }

    #[test]
    fn mean_across_torus_seam() {
        let f = build_lattice(200.0, 2, 2).unwrap();
        // block straddles x = 0 on a 400-wide torus
        let img = image(&[(395.0, 0.0), (5.0, 0.0), (1.0, 0.0)], vec![0, 0, 0], &f);
        let avg = average_oracle(&img).unwrap();
        let p = avg.points.get(0);
        assert!((p[0] - (1.0 / 3.0)).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn voronoi_partition_reassigns_stray_points() {
        let f = box_field(&[(0.0, 0.0), (200.0, 0.0)]);
        // the third point came from emitter 0 but sits in the cell of emitter 1
        let img = image(&[(-2.0, 0.0), (2.0, 0.0), (150.0, 0.0), (210.0, 0.0)], vec![0, 0, 0, 1], &f);
        let oracle = average_oracle(&img).unwrap();
        let vor = average_voronoi(&img).unwrap();
        assert!((oracle.points.get(0)[0] - 50.0).abs() < 1e-12);
        assert_eq!(vor.points.get(0), &[0.0, 0.0]);
        assert_eq!(vor.points.get(1), &[180.0, 0.0]);
        assert_eq!(vor.partition_used, Partition::Voronoi);
    }

    #[test]
    fn partitions_agree_when_points_stay_home() {
        let f = build_lattice(200.0, 4, 4).unwrap();
        let counts = ActivationCounts::from_counts(vec![5; 16], 5.0);
        let img = synthesize_ffl(&f, &counts, &ErrorModel::isotropic(5.0), 8).unwrap();
        let a = average_oracle(&img).unwrap();
        let b = average_voronoi(&img).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.kept_emitters, b.kept_emitters);
    }

    #[test]
    fn fold_rejects_perfect_average() {
        let f = build_lattice(200.0, 2, 2).unwrap();
        let counts = ActivationCounts::from_counts(vec![2; 4], 2.0);
        let img = synthesize_ffl(&f, &counts, &ErrorModel::isotropic(0.0), 0).unwrap();
        let avg = average_oracle(&img).unwrap();
        assert_eq!(improvement_fold(&img, &avg, &f), Err(Error::DegenerateImage));
    }
}
