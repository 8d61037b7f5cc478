#![allow(dead_code)]

pub mod cbuild;

use pcroot::bayesnet::{parse_bn, BayesNet, Variable};
use pcroot::circuit::parse_circuit;
use pcroot::{Circuit, Evidence};
use rand::seq::SliceRandom;
use rand::Rng;

pub const KTG_BNET: &str = include_str!("../data/ktg.bnet");
pub const KTG_PCIR: &str = include_str!("../data/ktg.pcir");

pub fn ktg_bn() -> BayesNet {
    parse_bn(KTG_BNET).unwrap()
}

pub fn ktg_circuit() -> Circuit {
    parse_circuit(KTG_PCIR).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        if got == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (got - want).abs() / want.abs()
    }
}

/// Random network with at most `max_vars` variables and cardinality at most
/// `max_card`. Variable ids are shuffled so id order is not always
/// topological. Roughly one CPT entry in twenty is zero.
pub fn random_bn<R: Rng>(rng: &mut R, max_vars: usize, max_card: usize) -> BayesNet {
    let n = rng.gen_range(1..=max_vars);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_card)).collect();
    // Parents in generation order, at most three, earlier variables only.
    let mut gen_parents: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut pool: Vec<usize> = (0..i).collect();
        pool.shuffle(rng);
        let k = rng.gen_range(0..=pool.len().min(3));
        gen_parents.push(pool[..k].to_vec());
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut vars = vec![None; n];
    let mut parents = vec![Vec::new(); n];
    let mut cpts = vec![Vec::new(); n];
    for g in 0..n {
        let id = perm[g];
        vars[id] = Some(Variable {
            name: format!("V{id}"),
            cardinality: cards[g],
        });
        parents[id] = gen_parents[g].iter().map(|&p| perm[p]).collect();
        let rows: usize = gen_parents[g].iter().map(|&p| cards[p]).product();
        for _ in 0..rows {
            let mut row: Vec<f64> = (0..cards[g])
                .map(|_| {
                    if rng.gen_bool(0.05) {
                        0.0
                    } else {
                        rng.gen_range(0.02..1.0)
                    }
                })
                .collect();
            if row.iter().all(|&x| x == 0.0) {
                row[0] = 1.0;
            }
            let s: f64 = row.iter().sum();
            cpts[id].extend(row.iter().map(|x| x / s));
        }
    }
    BayesNet::new(
        vars.into_iter().map(Option::unwrap).collect(),
        parents,
        cpts,
    )
    .unwrap()
}

/// Each variable observed with probability one half.
pub fn random_evidence<R: Rng>(rng: &mut R, cards: &[usize]) -> Evidence {
    Evidence::from_values(
        cards
            .iter()
            .map(|&k| rng.gen_bool(0.5).then(|| rng.gen_range(0..k)))
            .collect(),
    )
}

pub fn random_complete<R: Rng>(rng: &mut R, cards: &[usize]) -> Evidence {
    Evidence::from_values(cards.iter().map(|&k| Some(rng.gen_range(0..k))).collect())
}

/// Markov chain X0 -> X1 -> ... with P(X0) = (low, 1 - low) and
/// P(Xi | Xi-1 = 0) = (low, 1 - low), P(Xi | Xi-1 = 1) = (1 - low, low).
/// The all-zero assignment has probability `low^V`, which is also the
/// smallest joint probability when `low < 1/2`.
pub fn chain_bn(v: usize, low: f64) -> BayesNet {
    let vars = (0..v)
        .map(|i| Variable {
            name: format!("X{i}"),
            cardinality: 2,
        })
        .collect();
    let parents = (0..v)
        .map(|i| if i == 0 { vec![] } else { vec![i - 1] })
        .collect();
    let cpts = (0..v)
        .map(|i| {
            if i == 0 {
                vec![low, 1.0 - low]
            } else {
                vec![low, 1.0 - low, 1.0 - low, low]
            }
        })
        .collect();
    BayesNet::new(vars, parents, cpts).unwrap()
}

pub fn all_zero(v: usize) -> Evidence {
    Evidence::from_values(vec![Some(0); v])
}

/// The shared random corpus: `count` networks with at most ten variables of
/// cardinality at most three, each with its compiled circuit.
pub fn corpus(seed: u64, count: usize) -> Vec<(BayesNet, Circuit)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let bn = random_bn(&mut rng, 10, 3);
            let c = pcroot::bayesnet::compile(&bn).unwrap();
            (bn, c)
        })
        .collect()
}
