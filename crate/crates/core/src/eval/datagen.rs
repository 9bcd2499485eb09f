//! Synthetic data: Gaussian class pairs and the two toy scenes.
//!
//! Gaussian pairs use unit-variance classes, so their raw scale is already
//! comparable to standardized data. Scene coordinates live in the unit
//! square and are meant to be used unstandardized, since the network radii
//! quoted for them are in those units.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{class_names_from, ClassId, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Separation {
    Separated,
    Slight,
    Heavy,
}

impl Separation {
    /// Distance between the two class means, in standard deviations.
    pub fn sigmas(self) -> f64 {
        match self {
            Separation::Separated => 6.0,
            Separation::Slight => 3.0,
            Separation::Heavy => 1.0,
        }
    }
}

impl FromStr for Separation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separated" => Ok(Separation::Separated),
            "slight" => Ok(Separation::Slight),
            "heavy" => Ok(Separation::Heavy),
            _ => Err(Error::config(format!(
                "unknown separation {s:?} (separated, slight, heavy)"
            ))),
        }
    }
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Separation::Separated => "separated",
            Separation::Slight => "slight",
            Separation::Heavy => "heavy",
        })
    }
}

/// Two isotropic unit-variance 2-D Gaussians, `n` points each, with means
/// on the x axis `separation.sigmas()` apart.
pub fn gen_gaussian_pair(separation: Separation, n: usize, seed: u64) -> Result<LabeledDataset> {
    if n < 10 {
        return Err(Error::config("need at least 10 points per class"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let half = separation.sigmas() / 2.0;
    let mut rows = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(2 * n);
    for (j, cx) in [-half, half].into_iter().enumerate() {
        for _ in 0..n {
            rows.push(vec![cx + normal.sample(&mut rng), normal.sample(&mut rng)]);
            labels.push(ClassId(j));
        }
    }
    LabeledDataset::from_rows(rows, labels, class_names_from(["a", "b"]))
}

/// A training set plus ordered test instances with their intended labels.
#[derive(Clone, Debug)]
pub struct Scene {
    pub train: LabeledDataset,
    pub test: Vec<Vec<f64>>,
    pub test_labels: Vec<ClassId>,
}

impl Scene {
    pub fn test_dataset(&self) -> LabeledDataset {
        let mut out = self.train.empty_like();
        for (x, &y) in self.test.iter().zip(&self.test_labels) {
            out.push(x, y).expect("scene test points match the schema");
        }
        out
    }
}

pub const RED: ClassId = ClassId(0);
pub const BLUE: ClassId = ClassId(1);

fn scene_dataset(red: Vec<Vec<f64>>, blue: Vec<Vec<f64>>) -> LabeledDataset {
    let labels = std::iter::repeat_n(RED, red.len())
        .chain(std::iter::repeat_n(BLUE, blue.len()))
        .collect();
    let rows = red.into_iter().chain(blue).collect();
    LabeledDataset::from_rows(rows, labels, class_names_from(["red", "blue"])).expect("2-D scene")
}

const LOZENGE_STEP: f64 = 0.07;
const LOZENGE_ORIGIN: (f64, f64) = (0.5, 0.2);

fn lozenge_site(a: f64, b: f64) -> Vec<f64> {
    vec![
        LOZENGE_ORIGIN.0 + (a - b) * LOZENGE_STEP,
        LOZENGE_ORIGIN.1 + (a + b) * LOZENGE_STEP,
    ]
}

/// A 4x4 diamond lattice (red, 16 points) whose upper edge runs into a
/// dense blob (blue, 58 points). The two test points continue the lattice
/// one row past its top corner, inside the blob.
pub fn gen_lozenge_scene(seed: u64) -> Scene {
    let mut red = Vec::with_capacity(16);
    for a in 0..4 {
        for b in 0..4 {
            red.push(lozenge_site(a as f64, b as f64));
        }
    }
    let test = vec![lozenge_site(4.0, 2.0), lozenge_site(2.0, 4.0)];
    let centre = lozenge_site(4.0, 4.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = Normal::new(0.0, 0.09).expect("valid sd");
    let mut blue = Vec::with_capacity(58);
    while blue.len() < 58 {
        let p = vec![centre[0] + spread.sample(&mut rng), centre[1] + spread.sample(&mut rng)];
        // Keep the blob off the lattice itself so the red pattern stays clean.
        let clear = red.iter().all(|r| dist(r, &p) > 0.03) && test.iter().all(|t| dist(t, &p) > 0.01);
        if clear {
            blue.push(p);
        }
    }
    Scene {
        train: scene_dataset(red, blue),
        test,
        test_labels: vec![RED, RED],
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub const LINE_SPACING: f64 = 0.05;
pub const LINE_Y: f64 = 0.5;
pub const RECT: [f64; 4] = [0.64, 0.3, 1.34, 0.7];

/// Nine evenly spaced red points on a horizontal line that runs into a
/// uniformly filled blue rectangle (1000 points). The 14 test points carry
/// the line on, left to right, through the rectangle.
pub fn gen_line_rect_scene(seed: u64) -> Scene {
    let red: Vec<Vec<f64>> = (0..9)
        .map(|i| vec![0.1 + i as f64 * LINE_SPACING, LINE_Y])
        .collect();
    let test: Vec<Vec<f64>> = (0..14)
        .map(|i| vec![0.1 + (9 + i) as f64 * LINE_SPACING, LINE_Y])
        .collect();
    let [x0, y0, x1, y1] = RECT;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blue = (0..1000)
        .map(|_| vec![rng.random_range(x0..x1), rng.random_range(y0..y1)])
        .collect();
    Scene {
        train: scene_dataset(red, blue),
        test,
        test_labels: vec![RED; 14],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ClassNetwork;
    use crate::netbuild::{build_training_network, NetConfig};

    fn loo_1nn(ds: &LabeledDataset) -> f64 {
        let m = ds.metric();
        let hits = (0..ds.len())
            .filter(|&i| {
                let nn = (0..ds.len())
                    .filter(|&j| j != i)
                    .min_by(|&a, &b| m.dist(ds.row(i), ds.row(a)).total_cmp(&m.dist(ds.row(i), ds.row(b))))
                    .unwrap();
                ds.label(nn) == ds.label(i)
            })
            .count();
        hits as f64 / ds.len() as f64
    }

    #[test]
    fn gaussian_separation_levels() {
        assert!(loo_1nn(&gen_gaussian_pair(Separation::Separated, 200, 1).unwrap()) > 0.99);
        assert!(loo_1nn(&gen_gaussian_pair(Separation::Heavy, 200, 1).unwrap()) < 0.80);
        assert_eq!(
            gen_gaussian_pair(Separation::Slight, 50, 5).unwrap(),
            gen_gaussian_pair(Separation::Slight, 50, 5).unwrap()
        );
        assert!(gen_gaussian_pair(Separation::Slight, 9, 5).is_err());
    }

    #[test]
    fn lozenge_shape() {
        let s = gen_lozenge_scene(7);
        assert_eq!(s.train.class_sizes(), vec![16, 58]);
        assert_eq!(s.test.len(), 2);
        let g = build_training_network(&s.train, &NetConfig::new(2, 0.05)).unwrap();
        assert_eq!(g.connected_components().count, 2);
    }

    #[test]
    fn lozenge_test_points_look_blue_nearby() {
        let s = gen_lozenge_scene(7);
        let g = ClassNetwork::from_dataset(&s.train);
        for x in &s.test {
            let mut d: Vec<(f64, usize)> = (0..g.vertex_count()).map(|v| (g.distance_to(x, v), v)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            let blue = d[..5].iter().filter(|p| g.class_of(p.1) == BLUE).count();
            assert!(blue >= 3, "{blue} of 5 nearest are blue");
        }
    }

    #[test]
    fn line_rect_shape() {
        let s = gen_line_rect_scene(7);
        assert_eq!(s.train.class_sizes(), vec![9, 1000]);
        assert_eq!(s.test.len(), 14);
        assert!(s.test.windows(2).all(|w| w[0][0] < w[1][0]));
        let red = s.train.subset(&(0..9).collect::<Vec<_>>());
        let g = build_training_network(&red, &NetConfig::new(1, 0.07)).unwrap();
        assert_eq!(g.connected_components().count, 1);
        // The radius reaches exactly the two line neighbors of an inner point.
        assert_eq!(g.degree(4), 2);
        let [x0, y0, x1, y1] = RECT;
        let inside = s
            .test
            .iter()
            .filter(|p| (x0..=x1).contains(&p[0]) && (y0..=y1).contains(&p[1]))
            .count();
        assert!(inside >= 10);
        assert!(!(x0..=x1).contains(&s.test[0][0]));
    }
}
