use super::*;
use crate::compilers::{Expanded, IdCopy, IdCopySingle, NormalForm, PruMode};
use crate::qstate::trace_distance;
use crate::stats::agree;
use crate::symcrypto::Ske;
use crate::ucbit::{Ucbit, UcbitKey};


fn cfg(game: GameKind, trials: u64, seed: u64) -> GameConfig {
    GameConfig::new(game, trials, seed)
}

#[test]
fn aggregate_boundaries() {
    let rec = |win| TrialRecord { trial: 0, b: false, guesses: Bits::default(), win };
    let none = stats_aggregate(&vec![rec(false); 100]);
    assert_eq!((none.estimate, none.ci.0), (0.0, 0.0));
    let all = stats_aggregate(&vec![rec(true); 100]);
    assert_eq!((all.estimate, all.ci.1), (1.0, 1.0));
    let mut half = vec![rec(true); 50];
    half.extend(vec![rec(false); 50]);
    let h = stats_aggregate(&half);
    assert_eq!(h.estimate, 0.5);
    assert!((h.ci.0 - 0.404).abs() < 1e-3 && (h.ci.1 - 0.596).abs() < 1e-3);
}

#[test]
fn config_validation() {
    assert!(cfg(GameKind::Clone, 0, 1).validate().is_err());
    assert!(cfg(GameKind::Clone, 10, 1).copies(2, 2).validate().is_err());
    assert!(cfg(GameKind::Clone, 10, 1).copies(2, 3).validate().is_ok());
    let mut honest = cfg(GameKind::Clone, 10, 1).copies(1, 1);
    honest.degenerate = true;
    assert!(honest.validate().is_ok());
    let parsed: GameConfig = serde_json::from_str(r#"{"game":"idclone","trials":5,"seed":9}"#).unwrap();
    assert_eq!(parsed, cfg(GameKind::IdClone, 5, 9));
    assert!(run_clone(&cfg(GameKind::IdClone, 5, 9), &Ucbit::conjugate(2).unwrap(), &Guessing).is_err());
}

#[test]
fn guessing_wins_half_on_every_scheme() {
    let c = cfg(GameKind::Clone, 2000, 3);
    let u = Ucbit::conjugate(2).unwrap();
    assert!(run_clone(&c, &u, &Guessing).unwrap().as_estimate().contains(0.5));
    let e = Expanded::yao(u, 8, 2).unwrap();
    assert!(run_clone(&cfg(GameKind::Clone, 400, 4), &e, &Guessing).unwrap().as_estimate().contains(0.5));
}

#[test]
fn copying_a_classical_ciphertext_always_wins() {
    let u = Ucbit::classical_control(3).unwrap();
    for game in [GameKind::Clone, GameKind::IdClone] {
        let s = if game == GameKind::Clone {
            run_clone(&cfg(game, 300, 5), &u, &CopyForward).unwrap()
        } else {
            run_idclone(&cfg(game, 300, 5), &u, &CopyForward).unwrap()
        };
        assert_eq!(s.wins, 300);
    }
    let two = run_clone(&cfg(GameKind::Clone, 100, 6).copies(2, 3), &u, &CopyForward).unwrap();
    assert_eq!(two.wins, 100);
}

#[test]
fn bb84_broadcast_matches_born_rule() {
    let u = Ucbit::conjugate(2).unwrap();
    let exact = Bb84Broadcast::exact_win_probability(&u).unwrap();
    assert!((exact - 0.625).abs() < 1e-12, "{exact}");
    let s = run_clone(&cfg(GameKind::Clone, 4000, 7), &u, &Bb84Broadcast).unwrap();
    assert!(s.as_estimate().contains(exact), "{} vs {exact}", s.estimate);
}

#[test]
fn honest_decryptor_always_wins() {
    let mut c = cfg(GameKind::Clone, 60, 8).copies(1, 1);
    c.degenerate = true;
    let u = Ucbit::conjugate(3).unwrap();
    assert_eq!(run_clone(&c, &u, &HonestDecryptor).unwrap().wins, 60);
    assert_eq!(run_clone(&c, &Expanded::yao(u, 8, 2).unwrap(), &HonestDecryptor).unwrap().wins, 60);
    assert_eq!(run_clone(&c, &NormalForm::yao(u, 8, 1).unwrap(), &HonestDecryptor).unwrap().wins, 60);
    assert_eq!(run_clone(&c, &IdCopy::new(u, 8, PruMode::Ideal).unwrap(), &HonestDecryptor).unwrap().wins, 60);
}

#[test]
fn reports_are_deterministic() {
    let u = Ucbit::conjugate(2).unwrap();
    let c = cfg(GameKind::Clone, 500, 11);
    let a = run_clone(&c, &u, &Bb84Broadcast).unwrap();
    let b = run_clone(&c, &u, &Bb84Broadcast).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.transcripts, b.transcripts);
    let other = run_clone(&cfg(GameKind::Clone, 500, 12), &u, &Bb84Broadcast).unwrap();
    assert_ne!(a.transcripts, other.transcripts);
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert_eq!(text.lines().next().unwrap(), "trial,b,guesses,win");
}

/// Checks, inside the splitter, that the `t` delivered copies are the same
/// pure state: the swap test between any two accepts with probability 1.
struct SwapCheck;

impl<S: Scheme> Strategy<S> for SwapCheck {
    fn name(&self) -> String {
        "swap-check".into()
    }

    fn choose(&self, scheme: &S, _: &mut dyn EncOracle<S>, _: &mut QuantumMemory, _: &mut Stream) -> Result<Choice> {
        let (m0, m1) = distinct_pair(scheme.message_len());
        Ok(Choice::new(m0, m1, Bits::default()))
    }

    fn split(&self, _: &S, _: &Choice, cts: Vec<S::Ct>, mem: &mut QuantumMemory, t_prime: usize, _: &mut Stream) -> Result<Vec<Share<S::Ct>>> {
        let first = cts[0].registers();
        let first_refs: Vec<&str> = first.iter().map(String::as_str).collect();
        let rho0 = mem.reduced(&first_refs)?;
        for ct in &cts[1..] {
            let regs = ct.registers();
            let refs: Vec<&str> = regs.iter().map(String::as_str).collect();
            let rho = mem.reduced(&refs)?;
            let overlap = (rho0.matrix() * rho.matrix()).trace().re;
            let accept = (1.0 + overlap) / 2.0;
            if (accept - 1.0).abs() > 1e-9 {
                return Err(Error::Invariant(format!("swap test accepts with {accept}")));
            }
        }
        Ok((0..t_prime).map(|_| Share::classical(Bits::zeros(1))).collect())
    }

    fn guess(&self, _: &S, _: usize, _: &S::Dk, _: &Share<S::Ct>, _: &mut QuantumMemory, _: &mut Stream) -> Result<bool> {
        Ok(false)
    }
}

#[test]
fn identical_copies_pass_the_swap_test() {
    let id = IdCopy::new(Ucbit::conjugate(3).unwrap(), 8, PruMode::Ideal).unwrap();
    run_idclone(&cfg(GameKind::IdClone, 20, 13).copies(2, 3), &id, &SwapCheck).unwrap();
    // Independent encryptions are not identical.
    assert!(run_clone(&cfg(GameKind::Clone, 20, 13).copies(2, 3), &id, &SwapCheck).is_err());
}

#[test]
fn mixed_representation_refuses_several_copies() {
    let single = IdCopySingle::new(Ucbit::conjugate(2).unwrap(), 2).unwrap();
    let c = cfg(GameKind::IdClone, 10, 14).copies(2, 3);
    assert!(matches!(run_idclone(&c, &single, &Guessing), Err(Error::Precondition(_))));
    assert!(run_idclone(&cfg(GameKind::IdClone, 10, 14), &single, &Guessing).is_ok());
}

#[test]
fn single_copy_games_agree() {
    let u = Ucbit::conjugate(2).unwrap();
    let cc = Ucbit::classical_control(2).unwrap();
    let id = IdCopy::new(u, 8, PruMode::Brickwork { depth: None }).unwrap();
    let pairs = [
        (run_clone(&cfg(GameKind::Clone, 1500, 15), &u, &Bb84Broadcast), run_idclone(&cfg(GameKind::IdClone, 1500, 16), &u, &Bb84Broadcast)),
        (run_clone(&cfg(GameKind::Clone, 1500, 15), &cc, &CopyForward), run_idclone(&cfg(GameKind::IdClone, 1500, 16), &cc, &CopyForward)),
        (run_clone(&cfg(GameKind::Clone, 600, 15), &id, &CopyForward), run_idclone(&cfg(GameKind::IdClone, 600, 16), &id, &CopyForward)),
        (run_clone(&cfg(GameKind::Clone, 600, 15), &id, &Guessing), run_idclone(&cfg(GameKind::IdClone, 600, 16), &id, &Guessing)),
    ];
    for (a, b) in pairs {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!(agree(&a.as_estimate(), &b.as_estimate()), "{} {} vs {}", a.strategy, a.estimate, b.estimate);
    }
}

struct BadSplit;

impl Strategy<Ucbit> for BadSplit {
    fn name(&self) -> String {
        "bad".into()
    }

    fn choose(&self, _: &Ucbit, _: &mut dyn EncOracle<Ucbit>, _: &mut QuantumMemory, _: &mut Stream) -> Result<Choice> {
        let (m0, m1) = distinct_pair(1);
        Ok(Choice::new(m0, m1, Bits::default()))
    }

    fn split(&self, _: &Ucbit, _: &Choice, cts: Vec<UcbitCt>, _: &mut QuantumMemory, _: usize, _: &mut Stream) -> Result<Vec<Share<UcbitCt>>> {
        let s = Share { registers: cts[0].qubits.clone(), cts: cts.clone(), classical: Bits::default(), extra: None };
        Ok(vec![s.clone(), s])
    }

    fn guess(&self, _: &Ucbit, _: usize, _: &UcbitKey, _: &Share<UcbitCt>, _: &mut QuantumMemory, _: &mut Stream) -> Result<bool> {
        Ok(false)
    }
}

use crate::ucbit::UcbitCt;

#[test]
fn overlapping_shares_are_rejected() {
    let r = run_clone(&cfg(GameKind::Clone, 3, 17), &Ucbit::conjugate(2).unwrap(), &BadSplit);
    assert!(matches!(r, Err(Error::Protocol(_))));
}

#[test]
fn game_oracle_matches_direct_encryption() {
    let e = Expanded::yao(Ucbit::conjugate(2).unwrap(), 8, 1).unwrap();
    let mut rng = Stream::new(18);
    let (ek, dk) = e.gen(&mut rng).unwrap();
    let m = Bits::parse("1").unwrap();
    let mut via_oracle = QuantumMemory::new();
    let ct_a = GameOracle::new(&e, &ek, Stream::new(19)).encrypt(&m, &mut via_oracle).unwrap();
    let mut direct = QuantumMemory::new();
    let ct_b = e.enc(&ek, &m, &mut direct, &GameOracle::<Expanded>::tag(0), &mut Stream::new(19)).unwrap();
    assert_eq!(serde_json::to_value(&ct_a).unwrap(), serde_json::to_value(&ct_b).unwrap());
    let regs = ct_a.registers();
    let refs: Vec<&str> = regs.iter().map(String::as_str).collect();
    let d = trace_distance(&via_oracle.reduced(&refs[..2]).unwrap(), &direct.reduced(&refs[..2]).unwrap()).unwrap();
    assert!(d < 1e-12);
    assert_eq!(e.dec_distribution(&dk, &ct_a, &via_oracle).unwrap(), e.dec_distribution(&dk, &ct_b, &direct).unwrap());
}

#[test]
fn wrapped_guessing_wins_half() {
    let u = Ucbit::conjugate(2).unwrap();
    let w = ReductionWrap::new(Expanded::yao(u, 8, 1).unwrap(), Guessing);
    let s = run_clone(&cfg(GameKind::Clone, 3000, 20), &u, &w).unwrap();
    assert!(s.as_estimate().contains(0.5), "{} {:?}", s.estimate, &s.transcripts[..6]);
    let mismatch = ReductionWrap::new(Expanded::yao(Ucbit::conjugate(3).unwrap(), 8, 1).unwrap(), Guessing);
    assert!(matches!(run_clone(&cfg(GameKind::Clone, 2, 20), &u, &mismatch), Err(Error::Config(_))));
}

#[test]
fn wrapped_copy_tracks_the_direct_game() {
    let cc = Ucbit::classical_control(2).unwrap();
    let e = Expanded::yao(cc, 8, 2).unwrap();
    let direct = run_clone(&cfg(GameKind::Clone, 200, 21), &e, &CopyForward).unwrap();
    let wrapped = run_clone(&cfg(GameKind::Clone, 200, 22), &cc, &ReductionWrap::new(e.clone(), CopyForward)).unwrap();
    let mut hc = cfg(GameKind::Clone, 200, 22);
    hc.reveal_key = true;
    let hybrid = run_clone(&hc, &cc, &ReductionWrap::new(e, CopyForward)).unwrap();
    assert_eq!((direct.wins, wrapped.wins, hybrid.wins), (200, 200, 200));
}

/// Wrapped oracle answers decrypt correctly under the key a party assembles.
struct OracleProbe;

impl Strategy<Expanded> for OracleProbe {
    fn name(&self) -> String {
        "oracle-probe".into()
    }

    fn choose(&self, scheme: &Expanded, oracle: &mut dyn EncOracle<Expanded>, mem: &mut QuantumMemory, _: &mut Stream) -> Result<Choice> {
        let (m0, m1) = distinct_pair(scheme.message_len());
        let ct = oracle.encrypt(&m1, mem)?;
        let mut choice = Choice::new(m0, m1, Bits::default());
        choice.extra = Some(Arc::new(ct));
        Ok(choice)
    }

    fn split(&self, _: &Expanded, choice: &Choice, _: Vec<ExpandedCtOf>, _: &mut QuantumMemory, t_prime: usize, _: &mut Stream) -> Result<Vec<Share<ExpandedCtOf>>> {
        let ct: &ExpandedCtOf = choice.extra.as_ref().unwrap().downcast_ref().unwrap();
        let mut s = Share::classical(choice.m1.clone());
        s.registers = ct.registers();
        s.cts = vec![ct.clone()];
        let mut shares = vec![s];
        shares.extend((1..t_prime).map(|_| Share::classical(Bits::default())));
        Ok(shares)
    }

    fn guess(&self, scheme: &Expanded, party: usize, dk: &crate::compilers::SelectedKey, share: &Share<ExpandedCtOf>, mem: &mut QuantumMemory, _: &mut Stream) -> Result<bool> {
        if party > 0 {
            return Ok(false);
        }
        let dist = scheme.dec_distribution(dk, &share.cts[0], mem)?;
        Ok((dist.get(&share.classical).copied().unwrap_or(0.0) - 1.0).abs() < 1e-9)
    }
}

type ExpandedCtOf = crate::compilers::ExpandedCt<crate::dqre::EncodedCircuit>;

#[test]
fn simulated_oracle_is_decryptable() {
    let u = Ucbit::conjugate(2).unwrap();
    let w = ReductionWrap::new(Expanded::yao(u, 8, 2).unwrap(), OracleProbe);
    let mut c = cfg(GameKind::Clone, 40, 23).copies(1, 1);
    c.degenerate = true;
    let s = run_clone(&c, &u, &w).unwrap();
    // Party 0 outputs 1 exactly when the oracle ciphertext decrypted to m1.
    let ones = s.transcripts.iter().filter(|r| r.guesses.get(0)).count();
    assert_eq!(ones, 40);
}

/// Ciphertext `key ‖ (m ⊕ key)`: leaks its key.
struct LeakyKey(usize);

impl ClassicalScheme for LeakyKey {
    type Key = Bits;
    fn msg_len(&self) -> usize {
        self.0
    }
    fn ct_len(&self) -> usize {
        2 * self.0
    }
    fn gen(&self, rng: &mut dyn rand::RngCore) -> Bits {
        Bits::random(self.0, rng)
    }
    fn enc(&self, key: &Bits, m: &Bits, _: &mut dyn rand::RngCore) -> Result<Bits> {
        Ok(key.concat(&m.xor(key)?))
    }
    fn dec(&self, key: &Bits, ct: &Bits) -> Result<Bits> {
        ct.slice(self.0, 2 * self.0).xor(key)
    }
}

struct ReadKey;

impl ClassicalAdversary<LeakyKey> for ReadKey {
    fn name(&self) -> String {
        "read-key".into()
    }
    fn choose(&self, s: &LeakyKey, _: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<(Bits, Bits)> {
        Ok(distinct_pair(s.0))
    }
    fn guess(&self, s: &LeakyKey, pair: (&Bits, &Bits), ct: &Bits, _: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<bool> {
        Ok(s.dec(&ct.slice(0, s.0), ct)? == *pair.1)
    }
}

/// Ciphertext `m ‖ pad`.
struct InTheClear(usize);

impl ClassicalScheme for InTheClear {
    type Key = ();
    fn msg_len(&self) -> usize {
        self.0
    }
    fn ct_len(&self) -> usize {
        self.0 + 16
    }
    fn gen(&self, _: &mut dyn rand::RngCore) {}
    fn enc(&self, _: &(), m: &Bits, rng: &mut dyn rand::RngCore) -> Result<Bits> {
        Ok(m.concat(&Bits::random(16, rng)))
    }
    fn dec(&self, _: &(), ct: &Bits) -> Result<Bits> {
        Ok(ct.slice(0, self.0))
    }
}

use super::classical::ClassicalOracle;
use crate::symcrypto::ClassicalScheme;

#[test]
fn ind_game_controls() {
    let ske = Ske::new(16, 8).unwrap();
    let c = cfg(GameKind::Ind, 2000, 24);
    assert!(run_ind(&c, &ske, &ClassicalGuess).unwrap().as_estimate().contains(0.5));
    assert_eq!(run_ind(&cfg(GameKind::Ind, 200, 25), &LeakyKey(8), &ReadKey).unwrap().wins, 200);
    for s in [run_ind(&c, &ske, &OracleMatch).unwrap(), run_ind(&c, &ske, &PrefixMatch).unwrap()] {
        let (lo, hi) = s.advantage_ci();
        assert!(lo <= 0.0 && 0.0 <= hi, "{}: {lo} {hi}", s.strategy);
    }
    assert!(matches!(run_pr(&c, &ske, &ClassicalGuess), Err(Error::Config(_))));
}

#[test]
fn pr_game_controls() {
    let ske = Ske::new(16, 8).unwrap();
    let c = cfg(GameKind::Pr, 2000, 26);
    assert!(run_pr(&c, &ske, &ClassicalGuess).unwrap().as_estimate().contains(0.5));
    assert!(run_pr(&c, &ske, &PrefixMatch).unwrap().as_estimate().contains(0.5));
    assert!(run_pr(&c, &ske, &OracleMatch).unwrap().as_estimate().contains(0.5));
    let broken = run_pr(&c, &InTheClear(8), &PrefixMatch).unwrap();
    assert!(broken.estimate > 0.99, "{}", broken.estimate);
}

#[test]
fn wrong_message_length_is_a_protocol_violation() {
    struct Long;
    impl ClassicalAdversary<Ske> for Long {
        fn name(&self) -> String {
            "long".into()
        }
        fn choose(&self, s: &Ske, _: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<(Bits, Bits)> {
            Ok(distinct_pair(s.msg_len + 1))
        }
        fn guess(&self, _: &Ske, _: (&Bits, &Bits), _: &Bits, _: &mut ClassicalOracle<'_>, _: &mut Stream) -> Result<bool> {
            Ok(false)
        }
    }
    let r = run_ind(&cfg(GameKind::Ind, 2, 27), &Ske::new(16, 8).unwrap(), &Long);
    assert!(matches!(r, Err(Error::Protocol(_))));
}
