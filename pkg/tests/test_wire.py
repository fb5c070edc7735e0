import json
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apcr.crypto import DeterministicRng, KemKeyPair, SigKeyPair, SoftwareTee, SymKey, hash_bytes, recording
from apcr.errors import FormatError, IntegrityError, SignatureError
from apcr.wire import (
    CHALLENGE_LEN,
    EAR_PROFILE,
    KDC_CHALLENGE_LEN,
    KEY_MATERIAL_LEN,
    KEY_REQUEST_LEN,
    MAX_FRAME,
    EarResult,
    EarStatus,
    EvidenceMsg,
    Frame,
    KdcVerdictMsg,
    Metrics,
    MsgType,
    decode_challenge,
    decode_ear,
    decode_evidence,
    decode_kdc_challenge,
    decode_kdc_result_attester,
    decode_kdc_result_rp,
    decode_key_material,
    decode_key_request,
    decode_result,
    encode_challenge,
    encode_ear,
    encode_evidence,
    encode_kdc_result_attester,
    encode_kdc_result_rp,
    encode_key_material,
    encode_key_request,
    encode_result,
    frame,
    result_size,
)
from apcr.wire import cbor

import golden
from oracles import ccm_decrypt

KV = SymKey(bytes(range(16)))
EAR = EarResult(EAR_PROFILE, 1_700_000_000, "verifier.lan", b"\x1d" * 16, EarStatus.AFFIRMING)


# -- EAR --------------------------------------------------------------------

def test_ear_bytes_built_by_hand():
    def t(s):
        raw = s.encode()
        return (bytes([0x60 | len(raw)]) if len(raw) < 24 else bytes([0x78, len(raw)])) + raw

    expected = (b"\xa5"
                + t("iat") + b"\x1a" + struct.pack(">I", 1_700_000_000)
                + t("ueid") + b"\x50" + b"\x1d" * 16
                + t("ear.status") + b"\x02"
                + t("eat_profile") + t(EAR_PROFILE)
                + t("ear.verifier-id") + t("verifier.lan"))
    assert encode_ear(EAR) == expected
    assert len(expected) == 119


def test_demo_ear_size_gives_174_byte_result():
    assert result_size(len(encode_ear(EAR))) == 174


@pytest.mark.parametrize("status", list(EarStatus))
def test_ear_roundtrip(status):
    r = EarResult(EAR_PROFILE, 5, "v", bytes(16), status)
    assert decode_ear(encode_ear(r)) == r


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("iat"),
    lambda d: d.update(extra=1),
    lambda d: d.update({"ear.status": 7}),
    lambda d: d.update({"iat": "now"}),
    lambda d: d.update({"ueid": b"short"}),
    lambda d: d.update({"ear.verifier-id": b"bytes"}),
])
def test_ear_decoder_is_strict(mutate):
    d = cbor.loads(encode_ear(EAR))
    mutate(d)
    with pytest.raises(FormatError):
        decode_ear(cbor.dumps(d))
    with pytest.raises(FormatError):
        decode_ear(cbor.dumps([1, 2]))


# -- framing ----------------------------------------------------------------

def test_frame_layout():
    assert frame(MsgType.CHALLENGE, b"\xaa" * 55) == b"\xa1\x00\x37" + b"\xaa" * 55


@pytest.mark.parametrize("raw", [b"", b"\xa1\x00", b"\xa1\x00\x02\x00", b"\xa1\x00\x00\x00", b"\x07\x00\x00"])
def test_frame_rejects_bad_framing(raw):
    with pytest.raises(FormatError):
        Frame.from_bytes(raw)


def test_frame_size_boundary():
    assert len(frame(MsgType.EVIDENCE, bytes(MAX_FRAME - 3))) == 1024
    with pytest.raises(FormatError):
        frame(MsgType.EVIDENCE, bytes(MAX_FRAME - 2))
    with pytest.raises(FormatError):
        Frame.from_bytes(b"\xa2\x03\xfe" + bytes(MAX_FRAME - 2))


# -- metrics ---------------------------------------------------------------

def test_metrics_canonical_order():
    a = Metrics.of({"b": b"2", "a": b"1"})
    assert a.claims == (("a", b"1"), ("b", b"2"))
    swapped = b"".join(struct.pack(">H", len(x)) + x for x in (b"b", b"2", b"a", b"1"))
    with pytest.raises(FormatError):
        Metrics.decode(swapped)
    with pytest.raises(ValueError):
        Metrics((("a", b"1"), ("a", b"2")))


# -- challenge --------------------------------------------------------------

@given(st.binary(min_size=16, max_size=16), st.binary(min_size=16, max_size=16), st.binary(min_size=16, max_size=16))
def test_challenge_always_55_bytes(c, ident, key):
    cha = encode_challenge(c, ident, SymKey(key), DeterministicRng(c))
    assert len(cha) == CHALLENGE_LEN == 55
    assert decode_challenge(cha, SymKey(key)) == (c, ident)


def test_challenge_readable_by_independent_ccm_with_label():
    cha = encode_challenge(b"c" * 16, b"i" * 16, KV, DeterministicRng(0))
    assert ccm_decrypt(KV.raw, cha[:13], cha[13:], b"apcr/lpm/cha", 10) == b"c" * 16 + b"i" * 16


def test_challenge_is_not_a_result_and_vice_versa():
    cha = encode_challenge(b"c" * 16, b"i" * 16, KV, DeterministicRng(0))
    with pytest.raises(IntegrityError):
        decode_result(cha, KV)
    res = encode_result(EAR, b"c" * 16, b"i" * 16, KV, DeterministicRng(0))
    with pytest.raises(IntegrityError):
        decode_challenge(res, KV)


# -- evidence ---------------------------------------------------------------

def _evidence_parties():
    rng = DeterministicRng(b"ev")
    return SigKeyPair.generate(rng), KemKeyPair.generate(rng), SoftwareTee(rng=rng)


def test_evidence_signature_checked_before_decryption():
    signer, kem, tee = _evidence_parties()
    msg = encode_evidence(tee.attest_key(bytes(32)), Metrics.of({"x": b"1"}), b"cha", kem.public, signer,
                          DeterministicRng(1))
    with recording() as calls:
        decode_evidence(msg, kem, signer.public)
    assert calls.index("checksig") < calls.index("adec")
    bad = EvidenceMsg(msg.key_id, msg.sig, msg.ev[:-1] + bytes([msg.ev[-1] ^ 1]))
    with recording() as calls, pytest.raises(SignatureError):
        decode_evidence(bad, kem, signer.public)
    assert "adec" not in calls


def test_evidence_key_id_and_parse():
    signer, kem, tee = _evidence_parties()
    msg = encode_evidence(tee.attest_key(bytes(32)), Metrics(), b"", kem.public, signer, DeterministicRng(1))
    assert msg.key_id == hash_bytes(signer.public)
    assert EvidenceMsg.from_bytes(msg.to_bytes()) == msg
    with pytest.raises(FormatError):
        EvidenceMsg.from_bytes(bytes(32 + 64 + 47))


# -- kdc messages -----------------------------------------------------------

def test_kdc_result_attester_roundtrip_and_wrong_signer():
    rng = DeterministicRng(2)
    a_kem, v_sig, other = KemKeyPair.generate(rng), SigKeyPair.generate(rng), SigKeyPair.generate(rng)
    ks = SymKey(bytes(range(32, 48)))
    res_rp = encode_kdc_result_rp(EAR, b"c" * 16, bytes(32), ks, KV, rng)
    msg = encode_kdc_result_attester(res_rp, ks, a_kem.public, v_sig, rng)
    assert KdcVerdictMsg.from_bytes(msg.to_bytes()) == msg
    assert decode_kdc_result_attester(msg, a_kem, v_sig.public) == (res_rp, ks)
    assert decode_kdc_result_rp(res_rp, KV) == (EAR, b"c" * 16, bytes(32), ks)
    with pytest.raises(SignatureError):
        decode_kdc_result_attester(msg, a_kem, other.public)


def test_kdc_challenge_size():
    from apcr.wire import encode_kdc_challenge
    cha = encode_kdc_challenge(b"c" * 16, bytes(32), KV, DeterministicRng(0))
    assert len(cha) == KDC_CHALLENGE_LEN == 71
    assert decode_kdc_challenge(cha, KV) == (b"c" * 16, bytes(32))


# -- application messages ---------------------------------------------------

def test_key_request_layout():
    req = encode_key_request(1, bytes(range(16)))
    assert len(req) == KEY_REQUEST_LEN == 20
    assert req[:4] == b"\x01\x00\x11\x01"
    assert decode_key_request(req) == (1, bytes(range(16)))
    for bad in (req[:-1], b"\x02" + req[1:], req[:2] + b"\x12" + req[3:]):
        with pytest.raises(FormatError):
            decode_key_request(bad)


def test_key_material_size_and_key_binding():
    km = encode_key_material(bytes(96), KV, DeterministicRng(0))
    assert len(km) == KEY_MATERIAL_LEN == 119 == 13 + 96 + 10
    assert decode_key_material(km, KV) == bytes(96)
    with pytest.raises(IntegrityError):
        decode_key_material(km, SymKey(bytes(16)))
    with pytest.raises(ValueError):
        encode_key_material(bytes(95), KV)


# -- golden vectors --------------------------------------------------------

def test_golden_vectors_match_frozen_fixture():
    frozen = json.loads(golden.PATH.read_text())
    assert golden.vectors() == frozen


def test_golden_challenge_decrypts_under_independent_ccm():
    frozen = json.loads(golden.PATH.read_text())
    cha = bytes.fromhex(frozen["challenge"])
    assert ccm_decrypt(golden.KV.raw, cha[:13], cha[13:], b"apcr/lpm/cha", 10) == golden.C + golden.ID
    res = bytes.fromhex(frozen["result"])
    plain = ccm_decrypt(golden.KV.raw, res[:13], res[13:], b"apcr/lpm/res", 10)
    assert plain == bytes.fromhex(frozen["ear"]) + golden.C + golden.ID


@settings(max_examples=200)
@given(st.binary(min_size=1, max_size=174), st.data())
def test_result_decoder_never_crashes_on_garbage(blob, data):
    with pytest.raises((IntegrityError, FormatError)):
        decode_result(blob, KV)
