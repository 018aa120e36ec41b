mod common;

use common::{alphabet, small_sig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uncover::coherence::coherent_language_member;
use uncover::exec::{Letter, Trace};
use uncover::ghost::kcc_automaton;
use uncover::syntax::Signature;
use uncover::terms::oracle_coherent;

/// Whether some placement of single-ghost assignments before the letters of
/// `word` is coherent according to the term model.
fn brute_force_one_ghost(sig: &Signature, word: &[Letter]) -> bool {
    let gsig = sig.with_ghosts(1);
    let g = gsig.ghost_ids().next().unwrap();
    let choices: Vec<Option<Letter>> = std::iter::once(None)
        .chain(gsig.program_var_ids().map(|x| Some(Letter::Ghost { ghost: g, src: x })))
        .collect();
    let n = word.len();
    let total = choices.len().pow(n as u32);
    (0..total).any(|mut code| {
        let mut letters = Vec::new();
        for a in word {
            if let Some(l) = &choices[code % choices.len()] {
                letters.push(l.clone());
            }
            code /= choices.len();
            letters.push(a.clone());
        }
        let t = Trace::new(gsig.clone(), letters);
        oracle_coherent(&gsig, &t).unwrap().is_none()
    })
}

#[test]
fn zero_ghosts_match_coherence() {
    let sig = small_sig();
    let letters = alphabet(&sig);
    let kcc = kcc_automaton(&sig, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..3000 {
        let w = common::random_word(&sig, &letters, 1 + i % 8, false, &mut rng);
        let t = Trace::new(sig.clone(), w.clone());
        assert_eq!(kcc.accepts(&w), coherent_language_member(&t), "{w:?}");
    }
}

#[test]
fn one_ghost_matches_brute_force() {
    let sig = small_sig();
    let letters = alphabet(&sig);
    let kcc = kcc_automaton(&sig, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rescued = 0;
    for i in 0..400 {
        let w = common::random_word(&sig, &letters, 2 + i % 5, false, &mut rng);
        let expected = brute_force_one_ghost(&sig, &w);
        assert_eq!(kcc.accepts(&w), expected, "{w:?}");
        if expected {
            let t = kcc.interleaving(&w).expect("accepted words have a witness");
            assert_eq!(t.project().letters, w);
            assert_eq!(oracle_coherent(&t.sig, &t).unwrap(), None);
            rescued += !coherent_language_member(&Trace::new(sig.clone(), w.clone())) as usize;
        }
    }
    assert!(rescued > 0);
}
