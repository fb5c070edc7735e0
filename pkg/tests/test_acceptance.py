"""Acceptance criteria 1-8. Each test carries a ``criterion`` marker; the
terminal summary prints one PASS/FAIL line per criterion."""

import itertools
import json
import time

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from apcr.bench import bench_run
from apcr.crypto import DeterministicRng, KemKeyPair, SigKeyPair, SoftwareTee, SymKey, hash_bytes
from apcr.demo import demo_run, memory_channels, provision, udp_channels
from apcr.harness import (
    AdversaryScript,
    Entry,
    Modify,
    Rule,
    Topology,
    attack_suite,
    canonical_scenarios,
    check_correspondence,
    check_secrecy,
    run_scenario,
)
from apcr.roles import AbortReason, Policy, appraise
from apcr.wire import (
    EAR_PROFILE,
    LETTERS,
    EarResult,
    EarStatus,
    Frame,
    KdcVerdictMsg,
    Metrics,
    MsgType,
    cbor,
    decode_challenge,
    decode_ear,
    decode_evidence,
    decode_kdc_challenge,
    decode_kdc_evidence,
    decode_kdc_result_attester,
    decode_kdc_result_rp,
    decode_key_material,
    decode_key_request,
    decode_result,
    encode_challenge,
    encode_ear,
    encode_evidence,
    encode_kdc_challenge,
    encode_kdc_evidence,
    encode_kdc_result_attester,
    encode_kdc_result_rp,
    encode_key_material,
    encode_key_request,
    encode_result,
    frame,
)
from apcr.wire.messages import EvidenceMsg

import golden

VARIANTS = ("lpm", "kdc")


# -- 1. wire budgets -----------------------------------------------------------

@pytest.mark.criterion(1, "wire budgets 55/174/119/20 and RP 174/194")
def test_c1_wire_budgets(tmp_path):
    start = time.perf_counter()
    rng = DeterministicRng(b"c1")
    for _ in range(1000):
        assert len(encode_challenge(rng(16), rng(16), SymKey(rng(16)), rng)) == 55
    store = provision(tmp_path, DeterministicRng(1))
    r = demo_run(store, "lpm", channels=memory_channels(), seed=1)
    assert r.exit_status == 0
    sent, received = dict(r.rp.traffic.sent), dict(r.rp.traffic.received)
    assert sent[MsgType.CHALLENGE] == 55
    assert received[MsgType.RESULT_TO_RP] == 174
    assert sent[MsgType.KEY_MATERIAL] == r.attester.key_material_len == 119
    assert received[MsgType.KEY_REQUEST] == 20
    assert (r.rp.traffic.bytes_sent, r.rp.traffic.bytes_received) == (174, 194)
    assert time.perf_counter() - start < 1.0


# -- 2. honest-run correctness --------------------------------------------------

def _random_claims(seed: int) -> tuple[str, ...]:
    rng = DeterministicRng(seed).fork("claims")
    return tuple(f"claim-{i}-{rng(3).hex()}" for i in range(1 + rng(1)[0] % 5))


@pytest.mark.criterion(2, "1000 randomized honest runs per variant")
@pytest.mark.parametrize("variant", VARIANTS)
def test_c2_honest_runs(variant):
    start = time.perf_counter()
    for seed in range(1000):
        topo = Topology.generate(seed, variant, claims=_random_claims(seed))
        report = run_scenario(topo)
        (outcome,) = report.outcomes
        assert outcome.accepted, (seed, outcome.rp_state)
        assert report.accepts == 1
        assert check_correspondence(report), seed
        if variant == "kdc":
            (acc,) = report.events_named("relyingPartyAccepts")
            assert acc.params["ks"] == outcome.attester_key is not None
    assert time.perf_counter() - start < 10.0


# -- 3. attack suite --------------------------------------------------------------

def _sweep(variant: str, letter: str, size: int) -> tuple[int, int]:
    msg_type = LETTERS[variant][letter]
    accepts = 0
    runs = 0
    for i in range(size):
        for bit in range(8):
            script = AdversaryScript([Rule(msg_type, 1, Modify(i, 1 << bit))])
            report = run_scenario(Topology.generate(0, variant), script)
            accepts += report.accepts
            runs += 1
    return accepts, runs


@pytest.mark.criterion(3, "attack suite: zero RP acceptances, cuckoo aborts at step 13")
@pytest.mark.parametrize("variant", VARIANTS)
def test_c3_canonical_suite(variant):
    summary = attack_suite(variant)
    print("\n".join(summary.lines()))
    assert summary.attack_accepts == 0
    assert summary.honest_accepts == 1
    assert summary.ok
    if variant == "lpm":
        cuckoo = next(r for r in summary.results if r.name == "cuckoo-relay")
        assert (AbortReason.ID_BINDING_MISMATCH, 13) in cuckoo.aborts


@pytest.mark.criterion(3, "attack suite: zero RP acceptances, cuckoo aborts at step 13")
@pytest.mark.parametrize("variant,cha,res", [("lpm", "a", "d"), ("kdc", "b", "e")])
def test_c3_full_bit_flip_sweeps(variant, cha, res):
    honest = run_scenario(Topology.generate(0, variant))
    sizes = {e.msg_type: len(e.data) for e in honest.transcript.entries}
    start = time.perf_counter()
    a_accepts, a_runs = _sweep(variant, cha, sizes[LETTERS[variant][cha]])
    d_accepts, d_runs = _sweep(variant, res, sizes[LETTERS[variant][res]])
    took = time.perf_counter() - start
    print(f"{variant}: {a_runs} Cha flips, {d_runs} Res flips in {took:.1f}s")
    assert a_accepts == d_accepts == 0
    assert took < 30.0


# -- 4. secrecy -------------------------------------------------------------------

@pytest.mark.criterion(4, "secrecy of M_A, R_A, SymKeys and K_S across the scenario matrix")
def test_c4_secrecy_matrix():
    scanned = 0
    for variant in VARIANTS:
        for scenario in canonical_scenarios(variant):
            report = scenario.run(variant)
            secrets = report.secrets()
            assert report.topology.kv.raw in secrets
            for ev in report.events_named("verifierAccepts"):
                assert encode_ear(ev.params["result"]) in secrets
                if variant == "kdc":
                    assert ev.params["ks"].raw in secrets
            result = check_secrecy(report)
            assert result, (variant, scenario.name, result.problems)
            scanned += 1
    assert scanned >= 30


@pytest.mark.criterion(4, "secrecy of M_A, R_A, SymKeys and K_S across the scenario matrix")
def test_c4_planted_leak_fails_scanner():
    report = run_scenario(Topology.generate(0, "lpm"))
    ra = encode_ear(report.events_named("verifierAccepts")[0].params["result"])
    last = report.transcript.entries[-1]
    report.transcript.append(Entry(len(report.transcript), last.step + 1, last.src, last.dst, last.data + ra,
                                   "honest"))
    assert not check_secrecy(report)


# -- 5. codec properties --------------------------------------------------------

N = 10_000
FAST = settings(max_examples=N, database=None, deadline=None,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])

b16 = st.binary(min_size=16, max_size=16)
b32 = st.binary(min_size=32, max_size=32)
keys = b16.map(SymKey)
text = st.text(max_size=40)
ears = st.builds(EarResult, text, st.integers(-(2**64), 2**64 - 1), text, b16, st.sampled_from(list(EarStatus)))
metrics = st.dictionaries(st.text(min_size=1, max_size=20), st.binary(max_size=40), max_size=6).map(Metrics.of)

_P = DeterministicRng(b"c5")
SIGNER, KEM, TEE = SigKeyPair.generate(_P), KemKeyPair.generate(_P), SoftwareTee(rng=_P)


def _rng(seed: bytes) -> DeterministicRng:
    return DeterministicRng(seed)


cbor_values = st.recursive(
    st.integers(-(2**64), 2**64 - 1) | st.binary(max_size=30) | st.text(max_size=30),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=8), inner, max_size=4),
    max_leaves=12,
)


@pytest.mark.criterion(5, "codec roundtrips (10,000 each) and golden vectors")
class TestC5Codecs:
    @FAST
    @given(cbor_values)
    def test_cbor(self, v):
        assert cbor.loads(cbor.dumps(v)) == v

    @FAST
    @given(ears)
    def test_ear(self, r):
        assert decode_ear(encode_ear(r)) == r

    @FAST
    @given(metrics)
    def test_metrics(self, m):
        assert Metrics.decode(m.encode()) == m

    @FAST
    @given(b16, b16, keys, b16)
    def test_challenge(self, c, ident, kv, seed):
        assert decode_challenge(encode_challenge(c, ident, kv, _rng(seed)), kv) == (c, ident)

    @FAST
    @given(ears, b16, b16, keys, b16)
    def test_result(self, r, c, ident, kv, seed):
        assert decode_result(encode_result(r, c, ident, kv, _rng(seed)), kv) == (r, c, ident)

    @FAST
    @given(b32, metrics, st.binary(max_size=80), b16)
    def test_evidence(self, digest, m, cha, seed):
        ak = TEE.attest_key(digest)
        msg = encode_evidence(ak, m, cha, KEM.public, SIGNER, _rng(seed))
        parsed = EvidenceMsg.from_bytes(msg.to_bytes())
        assert decode_evidence(parsed, KEM, SIGNER.public) == (ak, m, cha)

    @FAST
    @given(b16, b32, keys, b16)
    def test_kdc_challenge(self, c, h, kv, seed):
        assert decode_kdc_challenge(encode_kdc_challenge(c, h, kv, _rng(seed)), kv) == (c, h)

    @FAST
    @given(metrics, b32, st.binary(max_size=80), b16)
    def test_kdc_evidence(self, m, h, cha, seed):
        msg = encode_kdc_evidence(m, h, cha, KEM.public, SIGNER, _rng(seed))
        parsed = EvidenceMsg.from_bytes(msg.to_bytes())
        assert decode_kdc_evidence(parsed, KEM, SIGNER.public) == (m, h, cha)

    @FAST
    @given(ears, b16, b32, keys, keys, b16)
    def test_kdc_result_rp(self, r, c, h, ks, kv, seed):
        assert decode_kdc_result_rp(encode_kdc_result_rp(r, c, h, ks, kv, _rng(seed)), kv) == (r, c, h, ks)

    @FAST
    @given(st.binary(max_size=300), keys, b16)
    def test_kdc_result_attester(self, res_rp, ks, seed):
        msg = encode_kdc_result_attester(res_rp, ks, KEM.public, SIGNER, _rng(seed))
        parsed = KdcVerdictMsg.from_bytes(msg.to_bytes())
        assert decode_kdc_result_attester(parsed, KEM, SIGNER.public) == (res_rp, ks)

    @FAST
    @given(st.integers(0, 255), b16)
    def test_key_request(self, app, nonce):
        assert decode_key_request(encode_key_request(app, nonce)) == (app, nonce)

    @FAST
    @given(st.binary(min_size=96, max_size=96), keys, b16)
    def test_key_material(self, door, key, seed):
        assert decode_key_material(encode_key_material(door, key, _rng(seed)), key) == door

    @FAST
    @given(st.sampled_from(list(MsgType)), st.binary(max_size=1021))
    def test_frame(self, t, payload):
        f = Frame.from_bytes(frame(t, payload))
        assert (f.type, f.payload) == (t, payload)

    def test_golden_vectors_bit_exact(self):
        frozen = json.loads(golden.PATH.read_text())
        fresh = golden.vectors()
        assert set(frozen) == {"ear", "metrics", "challenge", "evidence", "result", "kdc_challenge",
                               "kdc_evidence", "kdc_result_rp", "kdc_result_attester", "key_request",
                               "key_material", "frame"}
        assert fresh == frozen
        assert golden.vectors() == fresh


# -- 6. policy truth table ------------------------------------------------------

@pytest.mark.criterion(6, "policy truth table, 3 claims x {match, mismatch, missing, extra}")
def test_c6_policy_truth_table():
    names = ("boot", "fw", "tee")
    good = {n: hash_bytes(n.encode()) for n in names}
    policy = Policy.of(good)
    seen = 0
    for cases in itertools.product(("match", "mismatch", "missing"), repeat=3):
        for extra in (False, True):
            claims = {}
            for n, case in zip(names, cases):
                if case == "match":
                    claims[n] = good[n]
                elif case == "mismatch":
                    claims[n] = hash_bytes(b"bad" + n.encode())
            if extra:
                claims["unknown"] = b"\x00"
            if all(c == "match" for c in cases):
                want = EarStatus.WARNING if extra else EarStatus.AFFIRMING
            else:
                want = EarStatus.CONTRAINDICATED
            assert appraise(policy, Metrics.of(claims)) is want, (cases, extra)
            seen += 1
    assert seen == 54


# -- 7. benchmark structure ------------------------------------------------------

@pytest.mark.criterion(7, "benchmark report structure on loopback")
def test_c7_bench_structure(tmp_path):
    store = provision(tmp_path, DeterministicRng(7))
    rep = bench_run(store, 10, "lpm", channels=udp_channels())
    print(rep.text())
    assert len(rep.baseline_ms) == len(rep.full_ms) == len(rep.comm_ms) == 10
    assert min(rep.mean_baseline, rep.mean_full, rep.mean_comm) >= 0
    assert rep.comm_messages == rep.full_messages
    assert len(rep.full_messages) == 6
    assert rep.overhead == rep.mean_full - rep.mean_comm
    assert rep.overhead >= 0


# -- 8. determinism ---------------------------------------------------------------

@pytest.mark.criterion(8, "same seed gives byte-identical transcript hash")
@pytest.mark.parametrize("variant", VARIANTS)
def test_c8_determinism(variant):
    for seed in (0, 1, 12345):
        for scenario in canonical_scenarios(variant):
            a = scenario.run(variant, seed).transcript.digest()
            b = scenario.run(variant, seed).transcript.digest()
            assert a == b, (scenario.name, seed)
