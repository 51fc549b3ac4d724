use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::cil::{ClassId, TaskBatch};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::rpl::seeded_rng;

/// `B-m Inc-n`: `m` initial classes then `n` per task; `m = 0` means every
/// task (including the first) has `n` classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub initial: usize,
    pub increment: usize,
}

impl Protocol {
    pub fn new(initial: usize, increment: usize) -> Result<Self> {
        if increment == 0 {
            return Err(Error::InvalidParameter("protocol increment must be >= 1".into()));
        }
        Ok(Self { initial, increment })
    }

    /// Number of classes per task for `classes` total classes.
    pub fn task_sizes(&self, classes: usize) -> Result<Vec<usize>> {
        let err = || Error::IndivisibleSplit {
            classes,
            initial: self.initial,
            increment: self.increment,
        };
        if self.initial == 0 {
            if classes == 0 || classes % self.increment != 0 {
                return Err(err());
            }
            return Ok(vec![self.increment; classes / self.increment]);
        }
        if self.initial > classes || (classes - self.initial) % self.increment != 0 {
            return Err(err());
        }
        let mut sizes = vec![self.initial];
        sizes.extend(std::iter::repeat_n(self.increment, (classes - self.initial) / self.increment));
        Ok(sizes)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B-{} Inc-{}", self.initial, self.increment)
    }
}

impl FromStr for Protocol {
    type Err = Error;

    /// Accepts `B-m,Inc-n`, `B-m Inc-n` and `Bm-Incn`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse protocol `{s}` (expected B-m,Inc-n)"));
        let norm: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        let rest = norm.strip_prefix('b').ok_or_else(bad)?;
        let rest = rest.trim_start_matches('-');
        let split = rest.find("inc").ok_or_else(bad)?;
        let m = rest[..split].trim_end_matches([',', '-']).parse::<usize>().map_err(|_| bad())?;
        let n = rest[split + 3..].trim_start_matches('-').parse::<usize>().map_err(|_| bad())?;
        Protocol::new(m, n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSplit {
    pub protocol: Protocol,
    /// Class ids per task, in task order.
    pub task_classes: Vec<Vec<ClassId>>,
    pub train: Vec<TaskBatch>,
    pub test: Vec<TaskBatch>,
}

impl TaskSplit {
    pub fn tasks(&self) -> usize {
        self.task_classes.len()
    }
}

fn batches_for(
    features: &DenseMatrix,
    labels: &[ClassId],
    task_classes: &[Vec<ClassId>],
    allow_empty: bool,
) -> Result<Vec<TaskBatch>> {
    let mut out = Vec::with_capacity(task_classes.len());
    for (t, classes) in task_classes.iter().enumerate() {
        let idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| classes.contains(l))
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() && !allow_empty {
            return Err(Error::InvalidParameter(format!("task {} has no samples", t + 1)));
        }
        let batch_labels = idx.iter().map(|&i| labels[i]).collect();
        out.push(TaskBatch {
            features: features.select_rows(&idx),
            labels: batch_labels,
            task_index: t,
        });
    }
    Ok(out)
}

/// Assigns classes to tasks by a seeded permutation of the sorted class ids.
pub fn split_tasks(
    train_features: &DenseMatrix,
    train_labels: &[ClassId],
    test_features: &DenseMatrix,
    test_labels: &[ClassId],
    protocol: Protocol,
    seed: u64,
) -> Result<TaskSplit> {
    if train_features.rows() != train_labels.len() {
        return Err(Error::dim("split_tasks (train labels)", train_features.rows(), train_labels.len()));
    }
    if test_features.rows() != test_labels.len() {
        return Err(Error::dim("split_tasks (test labels)", test_features.rows(), test_labels.len()));
    }
    let classes: BTreeSet<ClassId> = train_labels.iter().copied().collect();
    if let Some(l) = test_labels.iter().find(|l| !classes.contains(l)) {
        return Err(Error::InvalidParameter(format!("test class {l} has no training samples")));
    }
    let mut order: Vec<ClassId> = classes.into_iter().collect();
    let sizes = protocol.task_sizes(order.len())?;
    order.shuffle(&mut seeded_rng(seed));

    let mut task_classes = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for size in sizes {
        task_classes.push(order[at..at + size].to_vec());
        at += size;
    }
    Ok(TaskSplit {
        protocol,
        train: batches_for(train_features, train_labels, &task_classes, false)?,
        test: batches_for(test_features, test_labels, &task_classes, true)?,
        task_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(classes: u32, per_class: usize) -> (DenseMatrix, Vec<ClassId>) {
        let labels: Vec<ClassId> = (0..classes).flat_map(|c| std::iter::repeat_n(c, per_class)).collect();
        let x = DenseMatrix::from_fn(labels.len(), 2, |i, j| (i * 2 + j) as f64);
        (x, labels)
    }

    #[test]
    fn protocol_sizes() {
        assert_eq!(Protocol::new(0, 5).unwrap().task_sizes(10).unwrap(), vec![5, 5]);
        assert_eq!(Protocol::new(4, 3).unwrap().task_sizes(10).unwrap(), vec![4, 3, 3]);
        assert!(matches!(
            Protocol::new(4, 4).unwrap().task_sizes(10),
            Err(Error::IndivisibleSplit { .. })
        ));
        assert!(Protocol::new(0, 3).unwrap().task_sizes(10).is_err());
    }

    #[test]
    fn protocol_parsing() {
        assert_eq!("B-4,Inc-3".parse::<Protocol>().unwrap(), Protocol::new(4, 3).unwrap());
        assert_eq!("B-0 Inc-5".parse::<Protocol>().unwrap(), Protocol::new(0, 5).unwrap());
        assert_eq!("B0-Inc10".parse::<Protocol>().unwrap(), Protocol::new(0, 10).unwrap());
        assert!("Inc-5".parse::<Protocol>().is_err());
        assert!("B-1,Inc-0".parse::<Protocol>().is_err());
    }

    #[test]
    fn split_covers_every_sample_once() {
        let (x, y) = data(10, 3);
        let split = split_tasks(&x, &y, &x, &y, Protocol::new(4, 3).unwrap(), 7).unwrap();
        assert_eq!(split.tasks(), 3);
        let sizes: Vec<usize> = split.task_classes.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let mut all: Vec<ClassId> = split.task_classes.concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());

        let mut rows: Vec<Vec<f64>> = split
            .train
            .iter()
            .flat_map(|b| (0..b.features.rows()).map(|i| b.features.row(i).to_vec()).collect::<Vec<_>>())
            .collect();
        rows.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        let expected: Vec<Vec<f64>> = (0..x.rows()).map(|i| x.row(i).to_vec()).collect();
        assert_eq!(rows, expected);
        for b in &split.train {
            assert!(b.labels.iter().all(|l| split.task_classes[b.task_index].contains(l)));
        }
    }

    #[test]
    fn seeds_permute_classes() {
        let (x, y) = data(10, 1);
        let p = Protocol::new(0, 5).unwrap();
        let a = split_tasks(&x, &y, &x, &y, p, 1).unwrap();
        let b = split_tasks(&x, &y, &x, &y, p, 1).unwrap();
        let c = split_tasks(&x, &y, &x, &y, p, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.task_classes, c.task_classes);
    }
}
