//! Sentences, programs, signatures, concrete syntax, and desugaring.

pub mod ast;
pub mod desugar;
pub mod parse;
pub mod print;
pub mod signature;

pub use ast::{Agent, NotSimple, Program, Sentence, SimpleAction};
pub use desugar::{desugar, is_desugared, DesugarError};
pub use parse::{parse_program, parse_sentence, ParseError};
pub use print::{render, render_action, render_full, render_program, render_program_full};
pub use signature::{Signature, SignatureError};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn pub_sig() -> Signature {
        corpus::pub_signature(&["A", "B"])
    }

    fn pri_sig() -> Signature {
        corpus::pri_signature(&["A"], &["A", "B"])
    }

    #[test]
    fn parses_single_box() {
        let s = parse_sentence("K_A p", &pub_sig()).unwrap();
        assert_eq!(s, Sentence::knows("A", Sentence::atom("p")));
    }

    #[test]
    fn parses_announcement_diamond() {
        let s = parse_sentence("<Pub(p)> E_{A,B} q", &pub_sig()).unwrap();
        assert_eq!(
            s,
            Sentence::dyn_diamond(
                Program::Basic("Pub".into(), vec![Sentence::atom("p")]),
                Sentence::common_poss(["A", "B"], Sentence::atom("q")),
            )
        );
    }

    #[test]
    fn precedence_matches_declared_order() {
        let sig = pub_sig();
        let s = parse_sentence("~p & q | r -> s -> t", &sig).unwrap();
        // ((~p & q) | r) -> (s -> t)
        let expect = Sentence::implies(
            Sentence::or(
                Sentence::and(Sentence::not(Sentence::atom("p")), Sentence::atom("q")),
                Sentence::atom("r"),
            ),
            Sentence::implies(Sentence::atom("s"), Sentence::atom("t")),
        );
        assert_eq!(s, expect);
    }

    #[test]
    fn arity_is_checked() {
        let err = parse_sentence("[Pri(p)] q", &pri_sig()).unwrap_err();
        assert!(err.msg.contains("argument"));
        assert!(parse_sentence("[Pri(p, true)] q", &pri_sig()).is_ok());
    }

    #[test]
    fn unknown_agent_rejected() {
        assert!(parse_sentence("K_C p", &pub_sig()).is_err());
        assert!(parse_sentence("C_{A,Z} p", &pub_sig()).is_err());
    }

    #[test]
    fn unknown_type_rejected() {
        assert!(parse_sentence("[Zap(p)] q", &pub_sig()).is_err());
    }

    #[test]
    fn renders_programs_with_spaces() {
        assert_eq!(
            render_program(&Program::seq(Program::Skip, Program::Crash)),
            "skip ; crash"
        );
    }

    #[test]
    fn renders_atom_bare() {
        assert_eq!(render(&Sentence::atom("p")), "p");
    }

    #[test]
    fn full_rendering_re_parses(){
        let sig = pri_sig();
        let s = parse_sentence("[Pri(p, q) ; Pri(r, true)](p -> C_{A,B} ~q)", &sig).unwrap();
        let full = render_full(&s);
        assert_eq!(parse_sentence(&full, &sig).unwrap(), s);
    }

    #[test]
    fn desugars_skip_and_crash() {
        let sig = pub_sig();
        let s = parse_sentence("[skip]p", &sig).unwrap();
        assert_eq!(desugar(&s).unwrap(), Sentence::atom("p"));
        let s = parse_sentence("[crash]p", &sig).unwrap();
        assert_eq!(desugar(&s).unwrap(), Sentence::True);
    }

    #[test]
    fn desugars_choice_to_conjunction() {
        let sig = pub_sig();
        let s = parse_sentence("[Pub(p) + Pub(q)]r", &sig).unwrap();
        let expect = parse_sentence("[Pub(p)]r & [Pub(q)]r", &sig).unwrap();
        assert_eq!(desugar(&s).unwrap(), expect);
    }

    #[test]
    fn desugar_rejects_star() {
        let sig = pub_sig();
        let s = parse_sentence("[Pub(p)*]q", &sig).unwrap();
        assert_eq!(desugar(&s).unwrap_err(), DesugarError::Star);
    }

    #[test]
    fn desugar_output_is_simple_under_modalities() {
        let sig = pri_sig();
        let s = parse_sentence(
            "<(Pri(p, true) + skip) ; Pri(q, q)> (p & [crash + Pri(p, p)]q)",
            &sig,
        )
        .unwrap();
        let d = desugar(&s).unwrap();
        assert!(is_desugared(&d));
    }

    #[test]
    fn desugaring_preserves_truth_sets() {
        use crate::corpus::{random_model, random_sentence, Lang, ModelCfg, SentenceCfg};
        use crate::semantics::eval_sentence;
        use rand::SeedableRng;
        let sig = pri_sig();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let scfg = SentenceCfg { depth: 3, lang: Lang::L1, ..SentenceCfg::default() };
        let mcfg = ModelCfg::default();
        for _ in 0..500 {
            let s = random_sentence(&mut rng, &sig, &scfg);
            let d = desugar(&s).unwrap();
            assert!(is_desugared(&d));
            let model = random_model(&mut rng, &sig, &mcfg);
            let before = eval_sentence(&model, &s, &sig, 0).unwrap().set;
            let after = eval_sentence(&model, &d, &sig, 0).unwrap().set;
            assert_eq!(before, after, "{s} vs {d}");
        }
    }

    mod roundtrip {
        use super::*;
        use crate::corpus::{random_sentence, Lang, SentenceCfg};
        use proptest::prelude::*;
        use rand::SeedableRng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn parse_render_identity(seed in any::<u64>()) {
                let sig = pri_sig();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let cfg = SentenceCfg { depth: 4, lang: Lang::Full, ..SentenceCfg::default() };
                let s = random_sentence(&mut rng, &sig, &cfg);
                let text = render(&s);
                let back = parse_sentence(&text, &sig);
                prop_assert_eq!(back.as_ref().ok(), Some(&s), "text: {}", text);
            }
        }
    }
}
