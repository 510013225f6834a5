"""Device parameters, noise configuration and Hamiltonian builders.

Builders return operators in rad/us. Time-dependent Hamiltonians are
expressed as lists of :class:`HamiltonianTerm`, each tied to an envelope
slot (``"eps2"``, ``"eps_x"``, ``"g_cr"``) whose value in MHz is supplied
by a pulse schedule; :class:`Generator` turns slot values into a matrix.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import hilbert as hb
from .dynamics import CollapseChannel
from .errors import ConfigError, InvalidDimensionError
from .units import TWO_PI, hz_to_angular

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib


# --------------------------------------------------------------- parameters

# field name -> (config key, default)
_PARAM_TABLE = {
    "K": ("K_MHz", 6.7),
    "eps2": ("eps2_MHz", 17.75),
    "eps2_ref": ("eps2_ref_MHz", 17.75),
    "eps_x": ("eps_x_MHz", 0.74),
    "eps_x_phase": ("eps_x_phase_rad", 0.0),
    "eps_x_gate": ("eps_x_gate_MHz", 6.5),
    "delta_as": ("Delta_as_MHz", 2.2),
    "xi_s": ("xi_s", 0.29),
    "xi_cr": ("xi_cr", 0.15),
    "g3": ("g3_MHz", 20.0),
    "chi_ab": ("chi_ab_MHz", 0.2),
    "g_cr": ("g_cr_MHz", 1.7),
    "g_cr_phase": ("g_cr_phase_rad", -math.pi / 2),
    "T1": ("T1_us", 15.5),
    "T2": ("T2_us", 3.4),
    "kappa_b_c": ("kappa_bc_MHz", 1.4),
    "kappa_b_l": ("kappa_bl_MHz", 0.5),
    "n_th": ("n_th", 0.04),
    "kappa_phi_eff": ("kappa_phi_eff_Hz", 0.0),
}
_KEY_TO_FIELD = {key: name for name, (key, _) in _PARAM_TABLE.items()}


@dataclass(frozen=True)
class DeviceParams:
    """Measured device constants in user units (MHz, us, Hz for kappa_phi).

    ``xi_s`` is the effective squeezing-pump strength at ``eps2_ref``; since
    eps2 = 3 g3 xi_s, the pump strength at any other squeezing amplitude is
    ``xi_s * |eps2| / eps2_ref``. ``g_cr`` and ``eps_x`` are magnitudes, their
    phases are separate fields. The default conversion phase -pi/2 turns
    g a^dag b + g* a b^dag into i|g|(a b^dag - a^dag b).
    """

    K: float = 6.7
    eps2: float = 17.75
    eps2_ref: float = 17.75
    eps_x: float = 0.74
    eps_x_phase: float = 0.0
    eps_x_gate: float = 6.5
    delta_as: float = 2.2
    xi_s: float = 0.29
    xi_cr: float = 0.15
    g3: float = 20.0
    chi_ab: float = 0.2
    g_cr: float = 1.7
    g_cr_phase: float = -math.pi / 2
    T1: float = 15.5
    T2: float = 3.4
    kappa_b_c: float = 1.4
    kappa_b_l: float = 0.5
    n_th: float = 0.04
    kappa_phi_eff: float = 0.0

    def __post_init__(self):
        for name in _PARAM_TABLE:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
                raise ConfigError(f"{_PARAM_TABLE[name][0]}: expected a number, got {v!r}")
            if not math.isfinite(v):
                raise ConfigError(f"{_PARAM_TABLE[name][0]}: must be finite")
            object.__setattr__(self, name, float(v))
        checks = [
            ("K", self.K > 0, "must be > 0"),
            ("eps2", self.eps2 >= 0, "must be >= 0"),
            ("eps2_ref", self.eps2_ref > 0, "must be > 0"),
            ("eps_x", self.eps_x >= 0, "must be >= 0"),
            ("eps_x_gate", self.eps_x_gate >= 0, "must be >= 0"),
            ("g_cr", self.g_cr >= 0, "must be >= 0"),
            ("g3", self.g3 > 0, "must be > 0"),
            ("xi_s", self.xi_s >= 0, "must be >= 0"),
            ("xi_cr", self.xi_cr >= 0, "must be >= 0"),
            ("T1", self.T1 > 0, "must be > 0"),
            ("T2", self.T2 > 0, "must be > 0"),
            ("kappa_b_c", self.kappa_b_c >= 0, "must be >= 0"),
            ("kappa_b_l", self.kappa_b_l >= 0, "must be >= 0"),
            ("kappa_b_l", self.kappa_b_c + self.kappa_b_l > 0, "kappa_bc + kappa_bl must be > 0"),
            ("n_th", 0 <= self.n_th < 1, "must lie in [0, 1)"),
            ("kappa_phi_eff", self.kappa_phi_eff >= 0, "must be >= 0"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{_PARAM_TABLE[name][0]}: {msg} (got {getattr(self, name)})")

    # derived quantities are computed, never stored
    @property
    def nbar(self) -> float:
        return self.eps2 / self.K

    @property
    def alpha(self) -> float:
        return math.sqrt(self.nbar)

    @property
    def kappa_a(self) -> float:
        """Single-photon loss rate 1/T1 in 1/us."""
        return 1.0 / self.T1

    @property
    def kappa_b(self) -> float:
        """Total cavity linewidth in MHz."""
        return self.kappa_b_c + self.kappa_b_l

    @property
    def eps_x_complex(self) -> complex:
        return self.eps_x * np.exp(1j * self.eps_x_phase)

    @property
    def g_cr_complex(self) -> complex:
        return self.g_cr * np.exp(1j * self.g_cr_phase)

    def xi_s_at(self, eps2) -> float:
        return self.xi_s * abs(eps2) / self.eps2_ref

    @property
    def stark_shift(self) -> float:
        """4 K |xi_s|^2 at the operating squeezing amplitude (MHz)."""
        return 4 * self.K * self.xi_s_at(self.eps2) ** 2

    # ---------------------------------------------------------- config I/O

    def replace(self, **changes) -> "DeviceParams":
        return dataclasses.replace(self, **changes)

    def to_config(self) -> dict[str, float]:
        return {key: getattr(self, name) for name, (key, _) in _PARAM_TABLE.items()}

    @classmethod
    def from_mapping(cls, data: Mapping[str, object], base: "DeviceParams | None" = None):
        changes = {}
        for key, value in data.items():
            name = _KEY_TO_FIELD.get(key, key if key in _PARAM_TABLE else None)
            if name is None:
                raise ConfigError(f"unknown parameter key {key!r}")
            changes[name] = value
        return dataclasses.replace(base or cls(), **changes)

    @classmethod
    def load(cls, path) -> "DeviceParams":
        return cls.from_mapping(read_config(path))

    def save(self, path) -> None:
        path = Path(path)
        cfg = self.to_config()
        if path.suffix.lower() == ".toml":
            path.write_text("".join(f"{k} = {v!r}\n" for k, v in cfg.items()))
        else:
            path.write_text(json.dumps(cfg, indent=2) + "\n")

    def with_overrides(self, pairs) -> "DeviceParams":
        """Apply ``key=value`` strings (the CLI ``--set`` syntax)."""
        data = {}
        for item in pairs:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, raw = (s.strip() for s in item.split("=", 1))
            try:
                data[key] = float(raw)
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {raw!r} as a number") from None
        return DeviceParams.from_mapping(data, base=self)


def read_config(path) -> dict:
    """Parse a TOML or JSON file (by extension); an empty file gives {}."""
    path = Path(path)
    text = path.read_text()
    if not text.strip():
        return {}
    if path.suffix.lower() == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def default_config() -> dict[str, float]:
    return DeviceParams().to_config()


# --------------------------------------------------------------- noise


@dataclass(frozen=True)
class NoiseConfig:
    """Which dissipators are switched on, with optional value overrides.

    Storage channels are kappa_a (1 + n_th) D[a], kappa_a n_th D[a^dag] and
    kappa_phi D[a^dag a]; the cavity (two-mode only) has kappa_b D[b].
    """

    storage_loss: bool = True
    thermal: bool = True
    dephasing: bool = True
    cavity_loss: bool = True
    T1: float | None = None
    n_th: float | None = None
    kappa_phi_eff: float | None = None

    @classmethod
    def off(cls) -> "NoiseConfig":
        return cls(False, False, False, False)

    @classmethod
    def cavity_only(cls) -> "NoiseConfig":
        return cls(False, False, False, True)

    def resolve(self, params: DeviceParams) -> DeviceParams:
        """Params with overrides applied (validated by DeviceParams)."""
        changes = {k: v for k, v in (("T1", self.T1), ("n_th", self.n_th),
                                     ("kappa_phi_eff", self.kappa_phi_eff)) if v is not None}
        return params.replace(**changes) if changes else params

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def channels(self, params: DeviceParams, dims) -> list[CollapseChannel]:
        p = self.resolve(params)
        dims = tuple(np.atleast_1d(dims))
        if len(dims) == 1:
            a = hb.annihilation(int(dims[0]))
            b = None
        else:
            a, b = hb.two_mode_ops(int(dims[0]), int(dims[1]))
        out = []
        if self.storage_loss:
            th = p.n_th if self.thermal else 0.0
            out.append(CollapseChannel(a, p.kappa_a * (1 + th), "loss"))
            if th > 0:
                out.append(CollapseChannel(a.conj().T, p.kappa_a * th, "gain"))
        if self.dephasing and p.kappa_phi_eff > 0:
            out.append(CollapseChannel(a.conj().T @ a, hz_to_angular(p.kappa_phi_eff), "dephasing"))
        if self.cavity_loss and b is not None:
            out.append(CollapseChannel(b, TWO_PI * p.kappa_b, "cavity"))
        return out


# --------------------------------------------------------------- terms


@dataclass(frozen=True)
class HamiltonianTerm:
    """One additive piece of a Hamiltonian.

    ``rule`` fixes how the slot value c (MHz, complex) scales ``operator``:

    * ``"static"``: operator as is (slot ignored)
    * ``"pair"``:   c * operator + conj(c) * operator^dag
    * ``"modulus2"``: |c / ref|^2 * operator (drive-induced Stark shifts)
    """

    operator: np.ndarray = field(repr=False)
    slot: str = "static"
    rule: str = "static"
    ref: float = 1.0
    label: str = ""

    def __post_init__(self):
        if self.rule not in ("static", "pair", "modulus2"):
            raise ValueError(f"unknown rule {self.rule!r}")

    def value(self, slots: Mapping[str, complex]) -> np.ndarray:
        if self.rule == "static":
            return self.operator
        c = complex(slots.get(self.slot, 0.0))
        if self.rule == "pair":
            m = c * self.operator
            return m + m.conj().T
        return (abs(c) / self.ref) ** 2 * self.operator

    def transformed(self, u: np.ndarray) -> "HamiltonianTerm":
        return dataclasses.replace(self, operator=u.conj().T @ self.operator @ u)


class Generator:
    """H(slot values) built from a fixed list of terms, with terms merged so
    each evaluation costs a handful of matrix additions."""

    def __init__(self, terms, dims):
        self.terms = tuple(terms)
        self.dims = tuple(int(d) for d in np.atleast_1d(dims))
        dim = int(np.prod(self.dims))
        static = np.zeros((dim, dim), complex)
        pairs: dict[str, np.ndarray] = {}
        mods: dict[str, np.ndarray] = {}
        for t in self.terms:
            if t.operator.shape != (dim, dim):
                raise InvalidDimensionError(f"term {t.label!r} has shape {t.operator.shape}, expected {(dim, dim)}")
            if t.rule == "static":
                static += t.operator
            elif t.rule == "pair":
                pairs[t.slot] = pairs.get(t.slot, 0) + t.operator
            else:
                mods[t.slot] = mods.get(t.slot, 0) + t.operator / t.ref**2
        self._static = static
        self._pairs = pairs
        self._mods = mods

    @property
    def dim(self) -> int:
        return self._static.shape[0]

    @property
    def slots(self) -> set[str]:
        return set(self._pairs) | set(self._mods)

    def __call__(self, slots: Mapping[str, complex]) -> np.ndarray:
        h = self._static.copy()
        for s, op in self._pairs.items():
            c = complex(slots.get(s, 0.0))
            if c:
                m = c * op
                h += m + m.conj().T
        for s, op in self._mods.items():
            c = abs(complex(slots.get(s, 0.0)))
            if c:
                h += c * c * op
        return h

    def transformed(self, u: np.ndarray, dims=None) -> "Generator":
        """Generator expressed in the columns of the isometry ``u``."""
        return Generator([t.transformed(u) for t in self.terms], dims or (u.shape[1],))


# --------------------------------------------------------------- builders


def _kerr(a):
    ad = a.conj().T
    return ad @ ad @ a @ a


def h_cat(K: float, eps2: complex, dim: int) -> np.ndarray:
    """-K a^dag^2 a^2 + eps2 a^dag^2 + eps2* a^2, in rad/us."""
    a = hb.annihilation(dim)
    if eps2 != 0:
        hb.check_truncation(math.sqrt(abs(eps2) / K), dim)
    ad2 = a.conj().T @ a.conj().T
    sq = eps2 * ad2
    return TWO_PI * (-K * _kerr(a) + sq + sq.conj().T)


def cat_terms(params: DeviceParams, dim: int, kind: str = "effective") -> list[HamiltonianTerm]:
    """Single-mode terms for the storage resonator.

    ``kind="ideal"`` gives the bare cat Hamiltonian; ``"effective"`` adds the
    detuning Delta_as and the squeezing-pump Stark shift, which follows the
    squeezing envelope as -4K |xi_s(t)|^2 a^dag a.
    """
    if kind not in ("ideal", "effective"):
        raise ValueError(f"unknown model kind {kind!r}")
    a = hb.annihilation(dim)
    ad = a.conj().T
    n = ad @ a
    terms = [
        HamiltonianTerm(TWO_PI * -params.K * _kerr(a), label="kerr"),
        HamiltonianTerm(TWO_PI * ad @ ad, "eps2", "pair", label="squeezing"),
        HamiltonianTerm(TWO_PI * ad, "eps_x", "pair", label="rabi"),
    ]
    if kind == "effective":
        terms.append(HamiltonianTerm(TWO_PI * params.delta_as * n, label="detuning"))
        if params.xi_s > 0:
            terms.append(HamiltonianTerm(
                TWO_PI * -4 * params.K * params.xi_s**2 * n, "eps2", "modulus2",
                ref=params.eps2_ref, label="stark_s"))
    return terms


def h_effective(params: DeviceParams, dim: int) -> np.ndarray:
    """Static effective Hamiltonian at the operating point (eps_x = 0)."""
    if params.eps2 > 0:
        hb.check_truncation(params.alpha, dim)
    return Generator(cat_terms(params, dim, "effective"), (dim,))({"eps2": params.eps2})


def h_full_two_mode(params: DeviceParams, dims, kind: str = "full") -> list[HamiltonianTerm]:
    """Terms of the storage + readout-cavity Hamiltonian.

    ``kind="full"`` has every term (detuning, Kerr, squeezing, Stark shifts
    of both pumps, cross-Kerr, conversion); ``"ideal"`` keeps only the cat
    Hamiltonian plus the conversion coupling.
    """
    da, db = (int(d) for d in dims)
    if da < 2 or db < 2:
        raise InvalidDimensionError("two-mode dims must be >= 2")
    if params.eps2 > 0:
        hb.check_truncation(params.alpha, da)
    a, b = hb.two_mode_ops(da, db)
    ad, bd = a.conj().T, b.conj().T
    na, nb = ad @ a, bd @ b
    terms = [
        HamiltonianTerm(TWO_PI * -params.K * _kerr(a), label="kerr"),
        HamiltonianTerm(TWO_PI * ad @ ad, "eps2", "pair", label="squeezing"),
        HamiltonianTerm(TWO_PI * ad, "eps_x", "pair", label="rabi"),
        HamiltonianTerm(TWO_PI * ad @ b, "g_cr", "pair", label="conversion"),
    ]
    if kind == "full":
        terms += [
            HamiltonianTerm(TWO_PI * params.delta_as * na, label="detuning"),
            HamiltonianTerm(TWO_PI * -params.chi_ab * na @ nb, label="cross_kerr"),
        ]
        if params.xi_s > 0:
            terms.append(HamiltonianTerm(TWO_PI * -4 * params.K * params.xi_s**2 * na, "eps2",
                                         "modulus2", ref=params.eps2_ref, label="stark_s"))
        if params.xi_cr > 0 and params.g_cr > 0:
            terms.append(HamiltonianTerm(TWO_PI * -4 * params.K * params.xi_cr**2 * na, "g_cr",
                                         "modulus2", ref=params.g_cr, label="stark_cr"))
    elif kind != "ideal":
        raise ValueError(f"unknown model kind {kind!r}")
    return terms


def drive_term(eps_x: complex, dim: int) -> np.ndarray:
    """eps_x a^dag + eps_x* a in rad/us."""
    a = hb.annihilation(dim)
    m = eps_x * a.conj().T
    return TWO_PI * (m + m.conj().T)


def classical_energy_surface(K: float, eps2: complex, grid) -> np.ndarray:
    """<a|H_cat|a> in MHz for coherent-state labels ``grid`` (complex)."""
    z = np.asarray(grid, complex)
    return -K * np.abs(z) ** 4 + 2 * np.real(np.conj(eps2) * z**2)


def generator(params: DeviceParams, dims, kind: str = "effective") -> Generator:
    dims = tuple(int(d) for d in np.atleast_1d(dims))
    if len(dims) == 1:
        return Generator(cat_terms(params, dims[0], kind), dims)
    return Generator(h_full_two_mode(params, dims, "ideal" if kind == "ideal" else "full"), dims)


# --------------------------------------------------------------- cat basis


@dataclass(frozen=True)
class CatBasis:
    """Encoded qubit basis in the Fock space plus the leakage eigenstates.

    ``vectors`` holds the highest-energy eigenstates of the static
    Hamiltonian as columns (cat pair first), ``energies`` their eigenvalues
    in rad/us and ``parities`` their photon-number parities.
    """

    vectors: np.ndarray = field(repr=False)
    energies: np.ndarray
    parities: np.ndarray
    alpha: complex

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def c_plus(self) -> np.ndarray:
        return self.vectors[:, 0]

    @property
    def c_minus(self) -> np.ndarray:
        return self.vectors[:, 1]

    def cardinals(self) -> dict[str, np.ndarray]:
        return hb.cardinal_states(self.c_plus, self.c_minus)

    @property
    def nbar(self) -> float:
        """Photon number of the coherent-state lobes, <n> in |+-X>.

        The even cat alone holds |alpha|^2 tanh|alpha|^2 photons, fewer than
        its lobes do.
        """
        n = hb.number(self.dim)
        v = self.vectors[:, :2]
        return float(np.real(np.trace(v.conj().T @ n @ v)) / 2)

    def projector(self) -> np.ndarray:
        v = self.vectors[:, :2]
        return v @ v.conj().T

    def qubit_block(self, rho: np.ndarray) -> np.ndarray:
        """2x2 block <C_i| rho |C_j> (not renormalized)."""
        v = self.vectors[:, :2]
        return v.conj().T @ rho @ v

    def bloch(self, rho: np.ndarray) -> tuple[float, float, float, float]:
        """(<I>, <X>, <Y>, <Z>) of rho projected on the cat pair."""
        r = self.qubit_block(np.asarray(rho))
        ident = float(np.real(r[0, 0] + r[1, 1]))
        x = float(2 * np.real(r[0, 1]))
        y = float(-2 * np.imag(r[0, 1]))
        z = float(np.real(r[0, 0] - r[1, 1]))
        return ident, x, y, z


def _block_eigh(h, par):
    out_w, out_v, out_p = [], [], []
    for sign in (1, -1):
        idx = np.nonzero(par == sign)[0]
        w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
        full = np.zeros((h.shape[0], len(idx)), complex)
        full[idx] = v
        out_w.append(w)
        out_v.append(full)
        out_p.append(np.full(len(idx), sign))
    return np.concatenate(out_w), np.concatenate(out_v, axis=1), np.concatenate(out_p)


def eigenbasis(h: np.ndarray, n_states: int | None = None):
    """Eigenpairs of a parity-conserving H, sorted by descending energy.

    Diagonalizing each parity block separately keeps eigenvectors of
    degenerate pairs parity-definite.
    """
    dim = h.shape[0]
    par = np.real(np.diag(hb.parity(dim)))
    w, v, p = _block_eigh(h, par)
    order = np.argsort(-w, kind="stable")
    if n_states is not None:
        order = order[:n_states]
    w, v, p = w[order], v[:, order], p[order]
    # deterministic gauge: largest component real positive
    k = np.argmax(np.abs(v), axis=0)
    v = v * np.exp(-1j * np.angle(v[k, np.arange(v.shape[1])]))
    return w, v, p


def cat_basis(params: DeviceParams, dim: int = 40, kind: str = "ideal",
              n_states: int = 2, eps2: complex | None = None) -> CatBasis:
    """Cat pair (and optionally more eigenstates) of the static Hamiltonian.

    The two highest-energy states of each parity block are the even and odd
    cats. Their phases are fixed so that the overlap with the analytic cats
    (|alpha> +- |-alpha>) is real and positive; for eps2 = 0 the pair falls
    back to Fock |0>, |1>.
    """
    eps2 = params.eps2 if eps2 is None else eps2
    p = params.replace(eps2=abs(eps2))
    if kind == "ideal":
        h = h_cat(params.K, eps2, dim)
    else:
        g = Generator(cat_terms(p, dim, "effective"), (dim,))
        h = g({"eps2": eps2})
    w, v, par = eigenbasis(h, None)
    if abs(eps2) == 0:
        ie = int(np.nonzero((par == 1) & np.isclose(np.abs(v[0]), 1))[0][0])
        io = int(np.nonzero((par == -1) & np.isclose(np.abs(v[1]), 1))[0][0])
        alpha = 0.0
    else:
        ie = int(np.nonzero(par == 1)[0][0])
        io = int(np.nonzero(par == -1)[0][0])
        alpha = math.sqrt(abs(eps2) / params.K) * np.exp(0.5j * np.angle(eps2))
    rest = [i for i in range(len(w)) if i not in (ie, io)]
    order = [ie, io] + rest[: max(0, n_states - 2)]
    vecs = v[:, order].copy()
    if alpha != 0:
        for col, sign in ((0, 1), (1, -1)):
            ref = hb.cat_state(alpha, sign, dim)
            ov = np.vdot(ref, vecs[:, col])
            vecs[:, col] *= np.exp(-1j * np.angle(ov))
    else:
        vecs[:, 0] = hb.fock(0, dim)
        vecs[:, 1] = hb.fock(1, dim)
    return CatBasis(vecs, w[order], par[order], alpha)
