//! Reduction of CTL* synthesis to LTL synthesis over enlarged outputs.
//!
//! Each existential subformula gets a witness-ID variable `v` in `0..=k` stored in
//! binary output bits, each ID `j` gets one direction bit per input, and each
//! universal subformula gets a fresh Boolean output.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{ltl_to_nbw, AutomatonError};
use crate::formula::Formula;
use crate::machine::Machine;
use crate::modelcheck::mc_ctl;
use crate::synth::{synth_loop, Encoding, Outcome, SynthError, SynthProblem, SynthReport};
use crate::spec::{decompose, fresh_prefix, Quantifier, Specification, SubformulaTable};

/// Names of the auxiliary outputs introduced by [`reduce`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessLayout {
    pub k: usize,
    /// Entry proposition of each existential subformula and its `v` bits, least significant first.
    pub v_bits: BTreeMap<String, Vec<String>>,
    /// `d[j-1][i]` records input `i` for witness ID `j`.
    pub d_bits: Vec<Vec<String>>,
    /// Entry proposition of each universal subformula and its output.
    pub p_props: BTreeMap<String, String>,
}

impl WitnessLayout {
    /// Bits needed to store `0..=k`.
    pub fn width(k: usize) -> usize {
        (usize::BITS - k.leading_zeros()) as usize
    }

    pub fn aux_outputs(&self) -> Vec<String> {
        let mut out: Vec<String> = self.v_bits.values().flatten().cloned().collect();
        out.extend(self.d_bits.iter().flatten().cloned());
        out.extend(self.p_props.values().cloned());
        out
    }
}

/// `v = j` as a conjunction of bit literals; false when `j` needs more bits.
pub fn v_equals(bits: &[String], j: usize) -> Formula {
    if bits.len() < usize::BITS as usize && j >> bits.len() != 0 {
        return Formula::False;
    }
    Formula::and(
        bits.iter()
            .enumerate()
            .map(|(b, name)| if j >> b & 1 == 1 { Formula::atom(name) } else { Formula::neg_atom(name) })
            .collect(),
    )
}

/// `v != 0`; false when there are no bits.
pub fn v_nonzero(bits: &[String]) -> Formula {
    Formula::or(bits.iter().map(Formula::atom).collect())
}

fn table(f: &Formula, reserved: &BTreeSet<String>) -> SubformulaTable {
    decompose(f, reserved)
}

/// Sum of NBW sizes over the bodies of existential subformulas.
pub fn witness_count(f: &Formula) -> Result<usize, AutomatonError> {
    let f = f.to_pnf();
    let t = table(&f, &f.atoms());
    let mut k = 0;
    for e in t.entries.iter().filter(|e| e.quantifier == Quantifier::E) {
        let props: Vec<String> = e.body.atoms().into_iter().collect();
        k += ltl_to_nbw(&e.body, &props)?.proper_state_count();
    }
    Ok(k)
}

/// Reduced specification together with the layout of its auxiliary outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub spec: Specification,
    pub layout: WitnessLayout,
    /// Outputs of the original specification.
    pub original_outputs: Vec<String>,
}

impl Reduction {
    /// Drops the auxiliary outputs of a machine for the reduced specification.
    pub fn project(&self, m: &Machine) -> Machine {
        project(m, &self.original_outputs)
    }
}

/// Keeps only `outputs`.
pub fn project(m: &Machine, outputs: &[String]) -> Machine {
    m.project_outputs(outputs)
}

/// Reduction with `k` equal to [`witness_count`].
pub fn reduce(spec: &Specification) -> Result<Reduction, AutomatonError> {
    let k = witness_count(&spec.formula)?;
    Ok(bounded_reduce(spec, k))
}

/// Reduction with a user-chosen number of witness IDs.
///
/// A realizable result is valid for the original specification; an unrealizable
/// one is only conclusive at the full [`witness_count`].
pub fn bounded_reduce(spec: &Specification, k: usize) -> Reduction {
    let reserved: BTreeSet<String> = spec.props().into_iter().collect();
    let t = table(&spec.formula, &reserved);
    let vp = fresh_prefix("v", &reserved);
    let dp = fresh_prefix("d", &reserved);
    let pp = fresh_prefix("pa", &reserved);
    let width = WitnessLayout::width(k);

    let mut layout = WitnessLayout { k, v_bits: BTreeMap::new(), d_bits: Vec::new(), p_props: BTreeMap::new() };
    let mut subst: BTreeMap<String, Formula> = BTreeMap::new();
    for (n, e) in t.entries.iter().enumerate() {
        match e.quantifier {
            Quantifier::E => {
                let bits: Vec<String> = (0..width).map(|b| format!("{vp}{}_{b}", n + 1)).collect();
                subst.insert(e.prop.clone(), v_nonzero(&bits));
                layout.v_bits.insert(e.prop.clone(), bits);
            }
            Quantifier::A => {
                let p = format!("{pp}{}", n + 1);
                subst.insert(e.prop.clone(), Formula::atom(&p));
                layout.p_props.insert(e.prop.clone(), p);
            }
        }
    }
    layout.d_bits =
        (1..=k).map(|j| spec.inputs.iter().map(|i| format!("{dp}{j}_{i}")).collect()).collect();

    let mut conj = vec![t.top.substitute(&subst)];
    for e in &t.entries {
        let body = e.body.substitute(&subst);
        match e.quantifier {
            Quantifier::E => {
                let bits = &layout.v_bits[&e.prop];
                for j in 1..=k {
                    let follows = Formula::globally(Formula::and(
                        spec.inputs
                            .iter()
                            .zip(&layout.d_bits[j - 1])
                            .map(|(i, d)| Formula::iff(Formula::atom(d), Formula::atom(i)))
                            .collect(),
                    ));
                    conj.push(Formula::globally(Formula::implies(
                        v_equals(bits, j),
                        Formula::implies(follows, body.clone()),
                    )));
                }
                // binary values above k carry no witness
                for j in k + 1..1usize << width {
                    conj.push(Formula::globally(Formula::not(v_equals(bits, j))));
                }
            }
            Quantifier::A => {
                let p = Formula::atom(&layout.p_props[&e.prop]);
                conj.push(Formula::globally(Formula::implies(p, body)));
            }
        }
    }

    let mut outputs = spec.outputs.clone();
    outputs.extend(layout.aux_outputs());
    let spec_out = Specification {
        inputs: spec.inputs.clone(),
        outputs,
        semantics: spec.semantics,
        formula: Formula::path_a(Formula::and(conj).to_pnf()),
    };
    Reduction { spec: spec_out, layout, original_outputs: spec.outputs.clone() }
}

/// Result of synthesizing through the reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViaLtlReport {
    pub reduction: Reduction,
    /// Report of the LTL search on the reduced specification.
    pub report: SynthReport,
    /// Projected machine, present when the reduced specification was realized.
    pub machine: Option<Machine>,
    /// `k` was below the witness count, so unrealizable verdicts are inconclusive.
    pub bounded: bool,
}

/// Reduces, runs LTL bounded synthesis and checks the projected machine against the original formula.
///
/// `p.encoding` is ignored; `k` defaults to the witness count.
pub fn synth_via_ltl(p: &SynthProblem, k: Option<usize>) -> Result<ViaLtlReport, SynthError> {
    let full = witness_count(&p.spec.formula)?;
    let k = k.unwrap_or(full);
    let reduction = bounded_reduce(&p.spec, k);
    let q = SynthProblem { spec: reduction.spec.clone(), encoding: Encoding::Ltl, ..p.clone() };
    let report = synth_loop(&q)?;
    let machine = match &report.outcome {
        Outcome::Realizable { machine, .. } => {
            let m = reduction.project(machine);
            if !mc_ctl(&m, &p.spec.formula)?.holds() {
                return Err(SynthError::GateFailed("projected machine violates the original formula".into()));
            }
            Some(m)
        }
        _ => None,
    };
    Ok(ViaLtlReport { reduction, report, machine, bounded: k < full })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelcheck::mc_ltl;
    use crate::parser::{parse_formula, parse_spec};
    use crate::spec::Semantics;

    fn pnf(s: &str) -> Formula {
        parse_formula(s).unwrap().to_pnf()
    }

    #[test]
    fn witness_counts() {
        assert_eq!(witness_count(&pnf("E G !g & A G E F !g & E F g")).unwrap(), 5);
        assert_eq!(witness_count(&pnf("E X (g & X (g & F !g))")).unwrap(), 5);
        assert_eq!(witness_count(&pnf("A G (r -> F g)")).unwrap(), 0);
    }

    #[test]
    fn widths() {
        assert_eq!(WitnessLayout::width(0), 0);
        assert_eq!(WitnessLayout::width(1), 1);
        assert_eq!(WitnessLayout::width(5), 3);
        assert_eq!(WitnessLayout::width(8), 4);
    }

    #[test]
    fn universal_only_reduction() {
        let s = parse_spec("inputs r; outputs g; moore; formula A F A G g;").unwrap();
        let r = reduce(&s).unwrap();
        assert_eq!(r.layout.k, 0);
        assert_eq!(r.layout.p_props.len(), 2);
        let expect = pnf("pa2 & G (pa1 -> G g) & G (pa2 -> F pa1)");
        assert_eq!(r.spec.ltl_body().unwrap(), &expect);
    }

    #[test]
    fn zero_k_makes_existentials_false() {
        let s = parse_spec("inputs r; outputs g; moore; formula E F g;").unwrap();
        let r = bounded_reduce(&s, 0);
        assert_eq!(r.spec.ltl_body().unwrap(), &Formula::False);
    }

    #[test]
    fn two_state_machine_satisfies_reduction() {
        let s = parse_spec("inputs r; outputs g; moore; formula E G !g & A G E F !g & E F g;").unwrap();
        let r = reduce(&s).unwrap();
        assert_eq!(r.layout.v_bits.len(), 3);
        assert_eq!(r.layout.d_bits.len(), 5);
        assert_eq!(r.layout.p_props.len(), 1);
        // t0: !g, p, v(EF!g)=v(EG!g)=2, d2 = !r, v(EF g)=3, d3 = r; t1: g, v(EF!g)=2, d2 = r
        let t = decompose(&s.formula, &s.props().into_iter().collect());
        let prop_of = |q: Quantifier, body: &str| {
            t.entries.iter().find(|e| e.quantifier == q && e.body == pnf(body)).unwrap().prop.clone()
        };
        let ef_ng = prop_of(Quantifier::E, "F !g");
        let eg_ng = prop_of(Quantifier::E, "G !g");
        let ef_g = prop_of(Quantifier::E, "F g");
        let mut set0: BTreeSet<String> = BTreeSet::new();
        let mut set1: BTreeSet<String> = BTreeSet::new();
        let put = |set: &mut BTreeSet<String>, bits: &[String], v: usize| {
            for (b, n) in bits.iter().enumerate() {
                if v >> b & 1 == 1 {
                    set.insert(n.clone());
                }
            }
        };
        put(&mut set0, &r.layout.v_bits[&ef_ng], 2);
        put(&mut set0, &r.layout.v_bits[&eg_ng], 2);
        put(&mut set0, &r.layout.v_bits[&ef_g], 3);
        set0.insert(r.layout.d_bits[2][0].clone());
        set0.extend(r.layout.p_props.values().cloned());
        put(&mut set1, &r.layout.v_bits[&ef_ng], 2);
        set1.insert("g".into());
        set1.insert(r.layout.d_bits[1][0].clone());
        set1.insert(r.layout.d_bits[2][0].clone());
        set1.extend(r.layout.p_props.values().cloned());
        let outs = &r.spec.outputs;
        let word = |set: &BTreeSet<String>| {
            outs.iter().enumerate().filter(|(_, o)| set.contains(*o)).fold(0u64, |a, (i, _)| a | 1 << i)
        };
        let m = Machine {
            kind: Semantics::Moore,
            inputs: vec!["r".into()],
            outputs: outs.clone(),
            trans: vec![vec![0, 1], vec![1, 0]],
            out: vec![vec![word(&set0)], vec![word(&set1)]],
        };
        assert!(mc_ltl(&m, r.spec.ltl_body().unwrap()).unwrap().holds());
        let p = r.project(&m);
        assert_eq!(p.outputs, vec!["g"]);
        assert!(mc_ctl(&p, &s.formula).unwrap().holds());
    }
}
