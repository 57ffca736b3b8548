//! Factored categorical policy: the actor's logits are split into one softmax
//! head per controlled agent.

use rand::Rng;

use crate::error::{Error, Result};

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Split `logits` into consecutive slices of the given head widths.
pub fn split_heads<'a>(logits: &'a [f64], heads: &'a [usize]) -> impl Iterator<Item = &'a [f64]> + 'a {
    heads.iter().scan(0usize, move |start, &w| {
        let s = &logits[*start..*start + w];
        *start += w;
        Some(s)
    })
}

fn check(logits: &[f64], heads: &[usize]) -> Result<()> {
    let total: usize = heads.iter().sum();
    if logits.len() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            got: logits.len(),
        });
    }
    if let Some(bad) = logits.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("policy logit {bad}")));
    }
    Ok(())
}

/// Sample one action per active head. Inactive heads get action 0 and add
/// nothing to the joint log-probability.
pub fn sample_action<R: Rng>(
    logits: &[f64],
    heads: &[usize],
    active: &[bool],
    rng: &mut R,
) -> Result<(Vec<usize>, f64)> {
    check(logits, heads)?;
    let mut actions = Vec::with_capacity(heads.len());
    let mut log_prob = 0.0;
    for (head, &on) in split_heads(logits, heads).zip(active) {
        if !on {
            actions.push(0);
            continue;
        }
        let lp = log_softmax(head);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut choice = head.len() - 1;
        for (k, l) in lp.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                choice = k;
                break;
            }
        }
        actions.push(choice);
        log_prob += lp[choice];
    }
    Ok((actions, log_prob))
}

/// Argmax per head; ties go to the lowest index.
pub fn greedy_action(logits: &[f64], heads: &[usize]) -> Vec<usize> {
    split_heads(logits, heads)
        .map(|head| {
            head.iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, (k, &v)| if v > best.1 { (k, v) } else { best },
                )
                .0
        })
        .collect()
}

pub fn joint_log_prob(logits: &[f64], heads: &[usize], actions: &[usize], active: &[bool]) -> f64 {
    split_heads(logits, heads)
        .zip(actions)
        .zip(active)
        .filter(|(_, &on)| on)
        .map(|((head, &a), _)| log_softmax(head)[a])
        .sum()
}

/// Sum of per-head entropies over active heads.
pub fn entropy(logits: &[f64], heads: &[usize], active: &[bool]) -> f64 {
    split_heads(logits, heads)
        .zip(active)
        .filter(|(_, &on)| on)
        .map(|(head, _)| -log_softmax(head).iter().map(|l| l.exp() * l).sum::<f64>())
        .sum()
}

/// Joint log-probability and entropy with their gradients w.r.t. the logits.
pub(crate) struct HeadTerms {
    pub log_prob: f64,
    pub entropy: f64,
    pub d_log_prob: Vec<f64>,
    pub d_entropy: Vec<f64>,
}

pub(crate) fn head_terms(logits: &[f64], heads: &[usize], actions: &[usize], active: &[bool]) -> HeadTerms {
    let mut t = HeadTerms {
        log_prob: 0.0,
        entropy: 0.0,
        d_log_prob: vec![0.0; logits.len()],
        d_entropy: vec![0.0; logits.len()],
    };
    let mut start = 0;
    for ((&w, &a), &on) in heads.iter().zip(actions).zip(active) {
        if on {
            let lp = log_softmax(&logits[start..start + w]);
            let h: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
            t.log_prob += lp[a];
            t.entropy += h;
            for (k, l) in lp.iter().enumerate() {
                let p = l.exp();
                t.d_log_prob[start + k] = if k == a { 1.0 - p } else { -p };
                t.d_entropy[start + k] = -p * (l + h);
            }
        }
        start += w;
    }
    t
}
