//! Letters and cube guards over a fixed, ordered proposition list.

use serde::{Deserialize, Serialize};

/// Total valuation; bit `i` is proposition `i`.
pub type Letter = u64;

/// Most propositions a bitmask can carry.
pub const MAX_PROPS: usize = 64;

/// Partial valuation: `care` marks constrained propositions, `value` their polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Guard {
    pub care: u64,
    pub value: u64,
}

impl Guard {
    pub const TRUE: Guard = Guard { care: 0, value: 0 };

    pub fn lit(prop: usize, positive: bool) -> Guard {
        let bit = 1u64 << prop;
        Guard { care: bit, value: if positive { bit } else { 0 } }
    }

    /// The cube fixing every proposition in `mask` to the letter's value.
    pub fn from_letter(letter: Letter, mask: u64) -> Guard {
        Guard { care: mask, value: letter & mask }
    }

    pub fn is_true(&self) -> bool {
        self.care == 0
    }

    pub fn matches(&self, letter: Letter) -> bool {
        letter & self.care == self.value
    }

    pub fn and(&self, other: &Guard) -> Option<Guard> {
        let common = self.care & other.care;
        if self.value & common != other.value & common {
            return None;
        }
        Some(Guard { care: self.care | other.care, value: self.value | other.value })
    }

    /// Every letter matching `self` also matches `other`.
    pub fn implies(&self, other: &Guard) -> bool {
        other.care & !self.care == 0 && self.value & other.care == other.value
    }

    pub fn literal(&self, prop: usize) -> Option<bool> {
        let bit = 1u64 << prop;
        (self.care & bit != 0).then_some(self.value & bit != 0)
    }

    pub fn restrict(&self, mask: u64) -> Guard {
        Guard { care: self.care & mask, value: self.value & mask }
    }

    pub fn literals(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        (0..64).filter_map(move |i| self.literal(i).map(|v| (i, v)))
    }

    /// Renders like `r !g`, or `true` for the empty cube.
    pub fn render(&self, props: &[String]) -> String {
        if self.is_true() {
            return "true".to_string();
        }
        self.literals()
            .map(|(i, v)| if v { props[i].clone() } else { format!("!{}", props[i]) })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the output of [`Guard::render`].
    pub fn parse(text: &str, props: &[String]) -> Result<Guard, String> {
        let text = text.trim();
        if text == "true" || text.is_empty() {
            return Ok(Guard::TRUE);
        }
        let mut g = Guard::TRUE;
        for tok in text.split(|c: char| c.is_whitespace() || c == '&').filter(|t| !t.is_empty()) {
            let (name, pos) = match tok.strip_prefix('!') {
                Some(n) => (n, false),
                None => (tok, true),
            };
            let idx = props
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| format!("unknown proposition '{name}'"))?;
            g = g.and(&Guard::lit(idx, pos)).ok_or_else(|| format!("contradictory cube '{text}'"))?;
        }
        Ok(g)
    }
}

/// Cubes covering exactly the letters not covered by `cubes`.
pub fn complement(cubes: &[Guard]) -> Vec<Guard> {
    fn go(cubes: &[Guard], acc: Guard, out: &mut Vec<Guard>) {
        if cubes.iter().any(|c| c.is_true()) {
            return;
        }
        if cubes.is_empty() {
            out.push(acc);
            return;
        }
        let union = cubes.iter().fold(0, |m, c| m | c.care);
        let v = union.trailing_zeros() as usize;
        let bit = 1u64 << v;
        for pos in [false, true] {
            let sub: Vec<Guard> = cubes
                .iter()
                .filter(|c| c.literal(v).is_none_or(|x| x == pos))
                .map(|c| Guard { care: c.care & !bit, value: c.value & !bit })
                .collect();
            go(&sub, acc.and(&Guard::lit(v, pos)).unwrap(), out);
        }
    }
    let mut out = Vec::new();
    go(cubes, Guard::TRUE, &mut out);
    out
}

/// Greedy merge of cubes: drops implied cubes and joins pairs differing in one literal.
pub fn simplify_cover(cubes: &[Guard]) -> Vec<Guard> {
    let mut cs: Vec<Guard> = cubes.to_vec();
    loop {
        cs.sort();
        cs.dedup();
        let mut changed = false;
        let mut keep = vec![true; cs.len()];
        for i in 0..cs.len() {
            for j in 0..cs.len() {
                if i != j && keep[j] && keep[i] && cs[i].implies(&cs[j]) {
                    keep[i] = false;
                    changed = true;
                }
            }
        }
        cs = cs.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| *c).collect();
        'outer: for i in 0..cs.len() {
            for j in i + 1..cs.len() {
                let (a, b) = (cs[i], cs[j]);
                let diff = a.value ^ b.value;
                if a.care == b.care && diff.count_ones() == 1 {
                    cs[i] = Guard { care: a.care & !diff, value: a.value & !diff };
                    cs.remove(j);
                    changed = true;
                    break 'outer;
                }
            }
        }
        if !changed {
            return cs;
        }
    }
}

/// A small cube cover of a set of letters over the propositions in `mask`.
pub fn cover_letters(letters: &[Letter], mask: u64) -> Vec<Guard> {
    let cubes: Vec<Guard> = letters.iter().map(|l| Guard::from_letter(*l, mask)).collect();
    simplify_cover(&cubes)
}

/// Enumerates every letter over the propositions in `mask`.
pub fn letters_of(mask: u64) -> impl Iterator<Item = Letter> {
    let n = mask.count_ones();
    let bits: Vec<u64> = (0..64).filter(|i| mask & (1 << i) != 0).map(|i| 1u64 << i).collect();
    (0..(1u64 << n)).map(move |k| {
        bits.iter().enumerate().fold(0, |l, (j, b)| if k & (1 << j) != 0 { l | b } else { l })
    })
}
