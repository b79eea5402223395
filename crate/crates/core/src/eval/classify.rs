//! Transductive node classification on a fixed embedding.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::logistic::{FitOptions, OvrModel};
use super::metrics::{macro_f1, mean_std, micro_f1};
use crate::error::{Error, Result};
use crate::numkernel::DenseMatrix;
use crate::par::{self, Exec};
use crate::rng::derive;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcRun {
    pub seed: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcReport {
    pub train_frac: f64,
    pub runs: Vec<NcRun>,
    /// (mean, std) over runs.
    pub micro_f1: (f64, f64),
    pub macro_f1: (f64, f64),
}

/// Per class, `round(x·c)` members go to training, clamped to `[1, c−1]`
/// when the class has at least two members. Singleton classes train only.
pub fn stratified_split(labels: &[Option<u32>], train_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Argument(format!("train fraction {train_frac} outside (0, 1)")));
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            by_class.entry(*l).or_default().push(i);
        }
    }
    if by_class.is_empty() {
        return Err(Error::DegenerateSplit("no labeled nodes".into()));
    }
    let mut rng = derive(seed, "nc-split", 0);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        let c = members.len();
        let take = if c == 1 {
            1
        } else {
            ((train_frac * c as f64).round() as usize).clamp(1, c - 1)
        };
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
    }
    if test.is_empty() {
        return Err(Error::DegenerateSplit("test split is empty".into()));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn gather(x: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
    let d = x.cols();
    let mut data = Vec::with_capacity(rows.len() * d);
    for &r in rows {
        data.extend_from_slice(x.row(r));
    }
    DenseMatrix::from_vec(rows.len(), d, data).expect("rows of a finite matrix")
}

pub fn node_classification_run(
    x: &DenseMatrix,
    labels: &[Option<u32>],
    train_frac: f64,
    seed: u64,
    opts: &FitOptions,
) -> Result<NcRun> {
    if x.rows() != labels.len() {
        return Err(Error::Shape(format!("embedding has {} rows, labels cover {} nodes", x.rows(), labels.len())));
    }
    let (train, test) = stratified_split(labels, train_frac, seed)?;
    let ytrain: Vec<u32> = train.iter().map(|&i| labels[i].expect("labeled")).collect();
    let ytest: Vec<u32> = test.iter().map(|&i| labels[i].expect("labeled")).collect();
    if let Some(missing) = ytest.iter().find(|c| !ytrain.contains(c)) {
        return Err(Error::DegenerateSplit(format!("class {missing} absent from training split")));
    }
    let model = OvrModel::fit(&gather(x, &train), &ytrain, opts, Exec::Sequential)?;
    let pred = model.predict(&gather(x, &test));
    Ok(NcRun {
        seed,
        micro_f1: micro_f1(&ytest, &pred),
        macro_f1: macro_f1(&ytest, &pred),
    })
}

/// Seeds run concurrently under `Exec::Parallel`; results do not depend on it.
pub fn node_classification(
    x: &DenseMatrix,
    labels: &[Option<u32>],
    train_frac: f64,
    seeds: &[u64],
    opts: &FitOptions,
    exec: Exec,
) -> Result<NcReport> {
    if seeds.is_empty() {
        return Err(Error::Argument("no seeds given".into()));
    }
    let runs = par::map(exec, seeds, |&s| node_classification_run(x, labels, train_frac, s, opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let micro: Vec<f64> = runs.iter().map(|r| r.micro_f1).collect();
    let macro_: Vec<f64> = runs.iter().map(|r| r.macro_f1).collect();
    Ok(NcReport {
        train_frac,
        micro_f1: mean_std(&micro),
        macro_f1: mean_std(&macro_),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn one_hot(labels: &[u32], c: usize) -> DenseMatrix {
        let mut x = DenseMatrix::zeros(labels.len(), c);
        for (i, &l) in labels.iter().enumerate() {
            x.set(i, l as usize, 1.0);
        }
        x
    }

    #[test]
    fn indicator_embedding_is_perfect() {
        let labels: Vec<u32> = (0..60).map(|i| (i % 4) as u32).collect();
        let x = one_hot(&labels, 4);
        let l: Vec<Option<u32>> = labels.iter().map(|&v| Some(v)).collect();
        for frac in [0.1, 0.5, 0.9] {
            let r = node_classification(&x, &l, frac, &[1, 2, 3], &FitOptions::default(), Exec::default()).unwrap();
            assert_eq!(r.micro_f1.0, 1.0);
            assert_eq!(r.macro_f1.0, 1.0);
        }
    }

    #[test]
    fn single_label_is_trivially_perfect() {
        let mut rng = seeded(0);
        let x = DenseMatrix::gaussian(20, 3, 1.0, &mut rng);
        let l = vec![Some(5); 20];
        let r = node_classification(&x, &l, 0.5, &[0], &FitOptions::default(), Exec::Sequential).unwrap();
        assert_eq!(r.micro_f1.0, 1.0);
    }

    #[test]
    fn random_features_are_at_chance() {
        let mut rng = seeded(11);
        let x = DenseMatrix::gaussian(400, 8, 1.0, &mut rng);
        let l: Vec<Option<u32>> = (0..400).map(|i| Some((i % 2) as u32)).collect();
        let seeds: Vec<u64> = (0..10).collect();
        let r = node_classification(&x, &l, 0.5, &seeds, &FitOptions::default(), Exec::default()).unwrap();
        assert!((r.micro_f1.0 - 0.5).abs() <= 0.05, "{:?}", r.micro_f1);
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let l: Vec<Option<u32>> = (0..50).map(|i| if i % 7 == 0 { None } else { Some((i % 3) as u32) }).collect();
        let (tr, te) = stratified_split(&l, 0.3, 9).unwrap();
        assert_eq!(stratified_split(&l, 0.3, 9).unwrap(), (tr.clone(), te.clone()));
        for c in 0..3 {
            assert!(tr.iter().any(|&i| l[i] == Some(c)));
            assert!(te.iter().any(|&i| l[i] == Some(c)));
        }
        assert!(tr.iter().chain(&te).all(|&i| l[i].is_some()));
        assert_eq!(tr.len() + te.len(), l.iter().flatten().count());
    }

    #[test]
    fn degenerate_inputs() {
        let l = vec![Some(0), Some(1)];
        assert!(matches!(stratified_split(&l, 0.5, 0), Err(Error::DegenerateSplit(_))));
        assert!(matches!(stratified_split(&l, 1.0, 0), Err(Error::Argument(_))));
        let x = DenseMatrix::zeros(3, 2);
        assert!(matches!(
            node_classification_run(&x, &l, 0.5, 0, &FitOptions::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut rng = seeded(4);
        let x = DenseMatrix::gaussian(90, 5, 1.0, &mut rng);
        let l: Vec<Option<u32>> = (0..90).map(|i| Some((i % 3) as u32)).collect();
        let seeds = [3, 1, 4, 1, 5];
        let a = node_classification(&x, &l, 0.5, &seeds, &FitOptions::default(), Exec::Sequential).unwrap();
        let b = node_classification(&x, &l, 0.5, &seeds, &FitOptions::default(), Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
