from .asymmetric import (
    HYBRID_OVERHEAD,
    PUBLIC_KEY_LEN,
    SIGNATURE_LEN,
    KemKeyPair,
    SigKeyPair,
    adec,
    aenc,
    checksig,
    sign,
)
from .symmetric import (
    AEAD_OVERHEAD,
    CCM_NONCE_LEN,
    DIGEST_LEN,
    ID_LEN,
    KEY_LEN,
    NONCE_LEN,
    TAG_LEN,
    AeadCiphertext,
    DeterministicRng,
    EntropySource,
    SymKey,
    attester_id,
    ct_equal,
    hash_bytes,
    rand_nonce,
    sdec,
    seal,
    senc,
    system_rng,
)
from .tee import KeyAttestation, SoftwareTee, validate_key_attestation
from .trace import recording

__all__ = [name for name in dir() if not name.startswith("_")]
