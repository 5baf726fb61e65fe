//! Aho-Corasick automaton over token ids instead of bytes.
//!
//! Construction:
//!
//! 1. Insert every pattern into a trie. State 0 is the root; each edge is
//!    labelled with a token id. The state reached by a complete pattern
//!    records that pattern's id.
//! 2. Compute failure links breadth-first. The failure link of a state is the
//!    state for its longest proper suffix that is also a trie path; depth-1
//!    states fail to the root.
//! 3. Compute output links: for each state, the nearest state on its failure
//!    chain that ends a pattern. Following output links from the current
//!    state enumerates every pattern ending at the current token.
//!
//! Tokens outside the pattern alphabet cannot continue any pattern, so the
//! scanner resets to the root on them.

use std::collections::{HashMap, VecDeque};

const ROOT: u32 = 0;
const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, Default)]
pub(crate) struct TokenAutomaton {
    goto: Vec<HashMap<u32, u32>>,
    fail: Vec<u32>,
    pattern: Vec<u32>,
    output_link: Vec<u32>,
    depth: Vec<u32>,
}

/// One occurrence: `len` tokens starting at token position `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Occurrence {
    pub start: usize,
    pub len: usize,
    pub pattern: u32,
}

impl TokenAutomaton {
    /// `patterns[i]` is the token-id sequence of pattern `i`. Sequences must
    /// be non-empty and distinct.
    pub(crate) fn build(patterns: &[Vec<u32>]) -> Self {
        let mut a = Self {
            goto: vec![HashMap::new()],
            fail: vec![ROOT],
            pattern: vec![NONE],
            output_link: vec![NONE],
            depth: vec![0],
        };
        for (pid, seq) in patterns.iter().enumerate() {
            debug_assert!(!seq.is_empty());
            let mut state = ROOT;
            for &tok in seq {
                state = match a.goto[state as usize].get(&tok) {
                    Some(&next) => next,
                    None => {
                        let next = a.goto.len() as u32;
                        a.goto.push(HashMap::new());
                        a.fail.push(ROOT);
                        a.pattern.push(NONE);
                        a.output_link.push(NONE);
                        a.depth.push(a.depth[state as usize] + 1);
                        a.goto[state as usize].insert(tok, next);
                        next
                    }
                };
            }
            debug_assert_eq!(a.pattern[state as usize], NONE, "duplicate pattern");
            a.pattern[state as usize] = pid as u32;
        }

        let mut queue: VecDeque<u32> = a.goto[ROOT as usize].values().copied().collect();
        while let Some(state) = queue.pop_front() {
            let mut edges: Vec<(u32, u32)> = a.goto[state as usize].iter().map(|(&t, &s)| (t, s)).collect();
            edges.sort_unstable();
            for (tok, child) in edges {
                let mut f = a.fail[state as usize];
                let target = loop {
                    if let Some(&next) = a.goto[f as usize].get(&tok) {
                        if next != child {
                            break next;
                        }
                    }
                    if f == ROOT {
                        break ROOT;
                    }
                    f = a.fail[f as usize];
                };
                a.fail[child as usize] = target;
                a.output_link[child as usize] = if a.pattern[target as usize] != NONE {
                    target
                } else {
                    a.output_link[target as usize]
                };
                queue.push_back(child);
            }
        }
        a
    }

    fn step(&self, mut state: u32, tok: u32) -> u32 {
        loop {
            if let Some(&next) = self.goto[state as usize].get(&tok) {
                return next;
            }
            if state == ROOT {
                return ROOT;
            }
            state = self.fail[state as usize];
        }
    }

    /// Every (possibly overlapping) occurrence of every pattern. `None`
    /// entries are tokens outside the alphabet.
    pub(crate) fn find_all(&self, text: &[Option<u32>]) -> Vec<Occurrence> {
        let mut out = Vec::new();
        let mut state = ROOT;
        for (pos, tok) in text.iter().enumerate() {
            state = match tok {
                Some(t) => self.step(state, *t),
                None => ROOT,
            };
            let mut s = if self.pattern[state as usize] != NONE {
                state
            } else {
                self.output_link[state as usize]
            };
            while s != NONE {
                let len = self.depth[s as usize] as usize;
                out.push(Occurrence {
                    start: pos + 1 - len,
                    len,
                    pattern: self.pattern[s as usize],
                });
                s = self.output_link[s as usize];
            }
        }
        out
    }

    pub(crate) fn state_count(&self) -> usize {
        self.goto.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(patterns: &[Vec<u32>], text: &[Option<u32>]) -> Vec<Occurrence> {
        let mut out = Vec::new();
        for start in 0..text.len() {
            for (pid, p) in patterns.iter().enumerate() {
                if start + p.len() <= text.len()
                    && p.iter().zip(&text[start..]).all(|(a, b)| Some(*a) == *b)
                {
                    out.push(Occurrence {
                        start,
                        len: p.len(),
                        pattern: pid as u32,
                    });
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn classic_overlaps() {
        // he, she, his, hers over token ids h=1 e=2 s=3 i=4 r=5
        let patterns = vec![vec![1, 2], vec![3, 1, 2], vec![1, 4, 3], vec![1, 2, 5, 3]];
        let text: Vec<Option<u32>> = [3, 1, 2, 5, 3, 1, 4, 3].iter().map(|&t| Some(t)).collect();
        let mut got = TokenAutomaton::build(&patterns).find_all(&text);
        got.sort();
        assert_eq!(got, naive(&patterns, &text));
        assert_eq!(got.len(), 4);
    }

    #[test]
    fn unknown_tokens_reset() {
        let patterns = vec![vec![1, 2]];
        let text = [Some(1), None, Some(2), Some(1), Some(2)];
        let got = TokenAutomaton::build(&patterns).find_all(&text);
        assert_eq!(got, [Occurrence { start: 3, len: 2, pattern: 0 }]);
    }

    #[test]
    fn agrees_with_naive_scan_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut patterns: Vec<Vec<u32>> = Vec::new();
            while patterns.len() < 12 {
                let len = rng.gen_range(1..4);
                let p: Vec<u32> = (0..len).map(|_| rng.gen_range(0..4)).collect();
                if !patterns.contains(&p) {
                    patterns.push(p);
                }
            }
            let text: Vec<Option<u32>> = (0..40)
                .map(|_| {
                    let t = rng.gen_range(0..5);
                    (t < 4).then_some(t)
                })
                .collect();
            let mut got = TokenAutomaton::build(&patterns).find_all(&text);
            got.sort();
            assert_eq!(got, naive(&patterns, &text));
        }
    }
}
