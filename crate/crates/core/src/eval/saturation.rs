//! Where each class component's walk statistics stop changing with `μ`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataset::ClassId;
use crate::graph::ClassNetwork;
use crate::walker::{saturation_point, walk_profile, WalkProfile};

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSaturation {
    pub class: ClassId,
    pub name: String,
    pub size: usize,
    pub mu_sat: Option<usize>,
    pub profile: WalkProfile,
}

/// Profiles every class for `μ = 0..=mu_max`; `None` for `mu_max` uses one
/// past the largest component, which is always long enough to show the
/// flat tail.
pub fn saturation_study(g: &ClassNetwork, mu_max: Option<usize>) -> Vec<ComponentSaturation> {
    let largest = (0..g.class_count())
        .map(|j| g.members(ClassId(j)).len())
        .max()
        .unwrap_or(0);
    let mu_max = mu_max.unwrap_or(largest + 1);
    (0..g.class_count())
        .into_par_iter()
        .map(|j| {
            let class = ClassId(j);
            let profile = walk_profile(g, class, mu_max);
            ComponentSaturation {
                class,
                name: g.class_names()[j].clone(),
                size: g.members(class).len(),
                mu_sat: saturation_point(&profile),
                profile,
            }
        })
        .collect()
}

pub fn saturation_csv(study: &[ComponentSaturation]) -> String {
    let mut s = String::from("class,mu,mean_transient,mean_cycle\n");
    for c in study {
        for (mu, (t, cy)) in c
            .profile
            .mean_transient
            .iter()
            .zip(&c.profile.mean_cycle)
            .enumerate()
        {
            let _ = writeln!(s, "{},{mu},{t:.6},{cy:.6}", c.name);
        }
    }
    s
}

pub fn saturation_summary(study: &[ComponentSaturation]) -> String {
    let mut s = String::new();
    for c in study {
        let sat = c.mu_sat.map_or("none".to_string(), |m| m.to_string());
        let _ = writeln!(s, "{}: size {}, saturation at mu = {sat}", c.name, c.size);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{class_names_from, LabeledDataset};
    use crate::netbuild::{build_training_network, NetConfig};

    #[test]
    fn components_saturate_within_their_size() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()])
            .collect();
        let labels = (0..30).map(|i| ClassId(i % 3)).collect();
        let ds = LabeledDataset::from_rows(rows, labels, class_names_from(["a", "b", "c"])).unwrap();
        let g = build_training_network(&ds, &NetConfig::new(2, 0.2)).unwrap();
        let study = saturation_study(&g, None);
        assert_eq!(study.len(), 3);
        for c in &study {
            assert!(c.mu_sat.unwrap() <= c.size);
            assert_eq!(c.profile.mu_max(), 11);
        }
        let csv = saturation_csv(&study);
        assert_eq!(csv.lines().count(), 1 + 3 * 12);
        assert!(saturation_summary(&study).contains("a: size 10"));
    }
}
