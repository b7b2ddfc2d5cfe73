"""The 106-profile sub-instance (k=3, m=4, n=6) with Pareto, cleverWR and symmetry breaking."""

from __future__ import annotations

import hashlib
from dataclasses import replace
from importlib import resources

from ..core import DomainSpec, Profile, parse_ballot
from .encoding import CnfInstance, EncodeOptions, encode

DATA_FILE = "appendix_c_profiles.txt"
DATA_SHA256 = "0613fed29a86e3071c9cf5a7ad61ee03bc98a762764327f9261358bfe2651d6f"
PROFILE_COUNT = 106

APPENDIX_C_SPEC = DomainSpec(n=6, m=4, k=3)
APPENDIX_C_OPTIONS = EncodeOptions(feasibility_filter="cleverWR", symmetry_breaking=True, pareto=True)


def load_profiles() -> list[tuple[str, Profile]]:
    """The labelled profiles, in table order, after checking the data checksum."""
    try:
        raw = resources.files("papp_lab.data").joinpath(DATA_FILE).read_bytes()
    except FileNotFoundError:
        raise RuntimeError(f"data file {DATA_FILE} is missing from the installation") from None
    digest = hashlib.sha256(raw).hexdigest()
    if digest != DATA_SHA256:
        raise RuntimeError(f"{DATA_FILE}: checksum {digest} does not match {DATA_SHA256}")
    out = []
    for line in raw.decode("ascii").splitlines():
        if not line.strip():
            continue
        label, ballots = line.split(":", 1)
        out.append((label.strip(), Profile.from_ballots(4, (parse_ballot(b) for b in ballots.split()))))
    if len(out) != PROFILE_COUNT:
        raise RuntimeError(f"{DATA_FILE}: expected {PROFILE_COUNT} profiles, found {len(out)}")
    return out


def encode_appendix_c(opts: EncodeOptions | None = None, jobs: int = 1) -> CnfInstance:
    """Encode the rule-existence question restricted to the 106 profiles.

    Deviations are only considered between profiles of the set.  ``opts``
    defaults to Pareto + cleverWR + symmetry breaking; its profile
    restriction is always replaced by the shipped profiles.
    """
    profiles = [p for _, p in load_profiles()]
    opts = replace(opts or APPENDIX_C_OPTIONS, profile_restriction=tuple(profiles))
    return encode(APPENDIX_C_SPEC, opts, jobs)
