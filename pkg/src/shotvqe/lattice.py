"""Lattice geometries, bond sets, checkerboard gate layers, symmetry groups.

Site indexing is row-major over (axis-1, axis-2); the hexagonal geometry uses
two-site unit cells indexed (cell, sublattice), site = 2*cell + sublattice.
All functions are pure over immutable inputs.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

GEOMETRIES = ("square", "triangular", "hexagonal")
BOUNDARIES = ("open", "periodic")

Bond = tuple[int, int]


class LatticeError(ValueError):
    """Raised for invalid lattice specs or incompatible symmetry requests."""


@dataclass(frozen=True)
class LatticeSpec:
    geometry: str
    extents: tuple[int, int]
    boundary: tuple[str, str] = ("periodic", "periodic")

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise LatticeError(f"unknown geometry {self.geometry!r}; expected one of {GEOMETRIES}")
        l1, l2 = self.extents
        if l1 < 1 or l2 < 1:
            raise LatticeError(f"extents must be positive, got {self.extents}")
        for b in self.boundary:
            if b not in BOUNDARIES:
                raise LatticeError(f"unknown boundary {b!r}; expected one of {BOUNDARIES}")
        if self.n_sites % 2 != 0:
            raise LatticeError(
                f"{self.geometry} {l1}x{l2} has {self.n_sites} sites; "
                "an odd site count admits no perfect dimer covering"
            )

    @property
    def n_cells(self) -> int:
        return self.extents[0] * self.extents[1]

    @property
    def n_sites(self) -> int:
        per_cell = 2 if self.geometry == "hexagonal" else 1
        return per_cell * self.n_cells

    @property
    def periodic(self) -> tuple[bool, bool]:
        return (self.boundary[0] == "periodic", self.boundary[1] == "periodic")

    def site_index(self, r: int, c: int, sub: int = 0) -> int:
        l1, l2 = self.extents
        base = (r % l1) * l2 + (c % l2)
        return 2 * base + sub if self.geometry == "hexagonal" else base

    def shift(self, r: int, c: int, dr: int, dc: int) -> tuple[int, int] | None:
        """Cell displaced by (dr, dc), or None if it leaves an open boundary."""
        l1, l2 = self.extents
        p1, p2 = self.periodic
        nr, nc = r + dr, c + dc
        if not p1 and not (0 <= nr < l1):
            return None
        if not p2 and not (0 <= nc < l2):
            return None
        return nr % l1, nc % l2


@dataclass(frozen=True)
class BondSet:
    n_sites: int
    j1_bonds: tuple[Bond, ...]
    j2_bonds: tuple[Bond, ...]

    def __post_init__(self):
        for name, bonds in (("j1", self.j1_bonds), ("j2", self.j2_bonds)):
            seen = set()
            for a, b in bonds:
                if a == b:
                    raise LatticeError(f"{name} bond ({a}, {b}) pairs a site with itself")
                if not (0 <= a < self.n_sites and 0 <= b < self.n_sites):
                    raise LatticeError(f"{name} bond ({a}, {b}) outside [0, {self.n_sites})")
                key = (min(a, b), max(a, b))
                if key in seen:
                    raise LatticeError(f"duplicate {name} bond {key}")
                seen.add(key)

    @property
    def all_bonds(self) -> tuple[Bond, ...]:
        return self.j1_bonds + self.j2_bonds


@dataclass(frozen=True)
class LayerDecomposition:
    layers: tuple[tuple[Bond, ...], ...]

    def __post_init__(self):
        for li, layer in enumerate(self.layers):
            used = [s for p in layer for s in p]
            if len(used) != len(set(used)):
                raise LatticeError(f"layer {li} reuses a site; pairs must be disjoint")

    @property
    def n_pairs(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def all_pairs(self) -> tuple[Bond, ...]:
        return tuple(p for layer in self.layers for p in layer)


@dataclass(frozen=True)
class SymmetryGroup:
    n_sites: int
    elements: tuple[tuple[int, ...], ...]
    characters: tuple[complex, ...]
    label: str = "trivial"

    def __post_init__(self):
        if len(self.elements) != len(self.characters):
            raise LatticeError("element/character length mismatch")
        ident = tuple(range(self.n_sites))
        if self.elements[0] != ident:
            raise LatticeError("element 0 must be the identity permutation")
        if abs(self.characters[0] - 1.0) > 1e-12:
            raise LatticeError("identity character must be 1")
        for g in self.elements:
            if sorted(g) != list(range(self.n_sites)):
                raise LatticeError("group element is not a site bijection")

    @property
    def order(self) -> int:
        return len(self.elements)

    def is_closed(self) -> bool:
        """Exhaustive composition-closure check; meant for |G| <= ~128."""
        members = set(self.elements)
        for g in self.elements:
            for h in self.elements:
                gh = tuple(g[h[i]] for i in range(self.n_sites))
                if gh not in members:
                    return False
        return True

    @classmethod
    def identity(cls, n_sites: int) -> "SymmetryGroup":
        return cls(n_sites, (tuple(range(n_sites)),), (1.0 + 0j,), label="identity")


def _dedupe_bonds(raw: list[Bond]) -> tuple[Bond, ...]:
    seen = {}
    for a, b in raw:
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        seen[key] = None
    return tuple(sorted(seen))


def _square_family(spec: LatticeSpec, dr: int, dc: int) -> tuple[Bond, ...]:
    l1, l2 = spec.extents
    raw = []
    for r in range(l1):
        for c in range(l2):
            dest = spec.shift(r, c, dr, dc)
            if dest is None:
                continue
            raw.append((spec.site_index(r, c), spec.site_index(*dest)))
    return _dedupe_bonds(raw)


def _hex_j1_family(spec: LatticeSpec, dr: int, dc: int) -> tuple[Bond, ...]:
    """A->B bonds with the B cell displaced by (dr, dc)."""
    l1, l2 = spec.extents
    raw = []
    for r in range(l1):
        for c in range(l2):
            dest = spec.shift(r, c, dr, dc)
            if dest is None:
                continue
            raw.append((spec.site_index(r, c, 0), spec.site_index(*dest, 1)))
    return _dedupe_bonds(raw)


def _hex_j2_family(spec: LatticeSpec, dr: int, dc: int, sub: int) -> tuple[Bond, ...]:
    l1, l2 = spec.extents
    raw = []
    for r in range(l1):
        for c in range(l2):
            dest = spec.shift(r, c, dr, dc)
            if dest is None:
                continue
            raw.append((spec.site_index(r, c, sub), spec.site_index(*dest, sub)))
    return _dedupe_bonds(raw)


# Bond families per geometry, as cell displacements.  The square j2 bonds are
# the two diagonals; the triangular geometry keeps only the (1, 1) diagonal as
# a true j2 bond, the (1, -1) family exists only as zero-coupling gate filler.
_SQUARE_J1 = ((0, 1), (1, 0))
_SQUARE_J2 = ((1, 1), (1, -1))
_TRI_J2 = ((1, 1),)
_HEX_J1 = ((0, 0), (-1, 0), (0, -1))
_HEX_J2 = ((1, 0), (0, 1), (1, -1))


def build_lattice(spec: LatticeSpec) -> BondSet:
    """Nearest (j1) and next-nearest (j2) neighbor bonds for the geometry."""
    if spec.geometry in ("square", "triangular"):
        j1 = [b for d in _SQUARE_J1 for b in _square_family(spec, *d)]
        j2_disp = _SQUARE_J2 if spec.geometry == "square" else _TRI_J2
        j2 = [b for d in j2_disp for b in _square_family(spec, *d)]
    else:
        j1 = [b for d in _HEX_J1 for b in _hex_j1_family(spec, *d)]
        j2 = [b for d in _HEX_J2 for s in (0, 1) for b in _hex_j2_family(spec, *d, s)]
    return BondSet(spec.n_sites, _dedupe_bonds(j1), _dedupe_bonds(j2))


def _greedy_matchings(bonds: tuple[Bond, ...]) -> list[list[Bond]]:
    """Partition bonds into disjoint-pair layers, first-fit in sorted order."""
    layers: list[list[Bond]] = []
    used: list[set[int]] = []
    for bond in sorted((min(b), max(b)) for b in bonds):
        for layer, sites in zip(layers, used):
            if bond[0] not in sites and bond[1] not in sites:
                layer.append(bond)
                sites.update(bond)
                break
        else:
            layers.append([bond])
            used.append(set(bond))
    return layers


def checkerboard_layers(spec: LatticeSpec) -> LayerDecomposition:
    """Gate layers of disjoint site pairs covering every bond exactly once.

    Square and triangular lattices use the four square bond families in the
    fixed order horizontal j1, vertical j1, then the two diagonals (for the
    triangular geometry the second diagonal enters as zero-coupling filler);
    even periodic extents yield the 8 full coverings.  The hexagonal lattice
    groups parallel dimers by j1 direction, then j2 axis, with incomplete
    coverings allowed.
    """
    families: list[tuple[Bond, ...]] = []
    if spec.geometry in ("square", "triangular"):
        for d in _SQUARE_J1 + _SQUARE_J2:
            families.append(_square_family(spec, *d))
    else:
        for d in _HEX_J1:
            families.append(_hex_j1_family(spec, *d))
        for d in _HEX_J2:
            families.append(_dedupe_bonds(
                [b for s in (0, 1) for b in _hex_j2_family(spec, *d, s)]
            ))
    layers: list[tuple[Bond, ...]] = []
    for fam in families:
        for layer in _greedy_matchings(fam):
            layers.append(tuple(layer))
    return LayerDecomposition(tuple(layers))


def _translation_elements(spec: LatticeSpec) -> list[tuple[tuple[int, int], np.ndarray]]:
    l1, l2 = spec.extents
    p1, p2 = spec.periodic
    shifts = [(dr, dc) for dr in (range(l1) if p1 else [0])
              for dc in (range(l2) if p2 else [0])]
    subs = (0, 1) if spec.geometry == "hexagonal" else (0,)
    elems = []
    for dr, dc in shifts:
        g = np.zeros(spec.n_sites, dtype=np.int64)
        for r in range(l1):
            for c in range(l2):
                for s in subs:
                    g[spec.site_index(r, c, s)] = spec.site_index(r + dr, c + dc, s)
        elems.append(((dr, dc), g))
    return elems


def _coord_maps(spec: LatticeSpec):
    """Candidate point-group maps (r, c, sub) -> (r, c, sub), unfiltered.

    Returns (centered, extra): maps in `centered` share a fixed center, so
    their closure stays translation-free; `extra` holds symmetries about
    other centers (hexagonal bond inversion) that only enter the full group.
    """
    l1, l2 = spec.extents
    p1, p2 = spec.periodic

    def neg(x, ln, periodic):
        return (-x) % ln if periodic else ln - 1 - x

    centered = []
    extra = []
    if spec.geometry in ("square", "triangular"):
        for sr in (1, -1):
            for sc in (1, -1):
                for swap in (False, True):
                    if swap and l1 != l2:
                        continue

                    def m(r, c, s, sr=sr, sc=sc, swap=swap):
                        rr = r if sr == 1 else neg(r, l1, p1)
                        cc = c if sc == 1 else neg(c, l2, p2)
                        return (cc, rr, s) if swap else (rr, cc, s)

                    centered.append(m)
    else:
        centered.append(lambda r, c, s: (r, c, s))
        # Mirror swapping the two cell axes; fixes the (0, 0) A site.
        if l1 == l2:
            centered.append(lambda r, c, s: (c, r, s))
        # Threefold rotation about the (0, 0) A site (periodic cell grid).
        if l1 == l2 and p1 and p2:
            def c3(r, c, s):
                if s == 0:
                    return (c % l1, (-c - r) % l2, 0)
                return (c % l1, (-c - r - 1) % l2, 1)

            centered.append(c3)
            centered.append(lambda r, c, s: c3(*c3(r, c, s)))
        # Inversion through an A-B bond center, sublattice-swapping.
        if p1 and p2:
            extra.append(lambda r, c, s: ((-r) % l1, (-c) % l2, 1 - s))
    return centered, extra


def _map_to_permutation(spec: LatticeSpec, m) -> np.ndarray | None:
    l1, l2 = spec.extents
    subs = (0, 1) if spec.geometry == "hexagonal" else (0,)
    g = np.full(spec.n_sites, -1, dtype=np.int64)
    for r in range(l1):
        for c in range(l2):
            for s in subs:
                rr, cc, ss = m(r, c, s)
                if not (0 <= rr < l1 and 0 <= cc < l2):
                    return None
                g[spec.site_index(r, c, s)] = spec.site_index(rr, cc, ss)
    if sorted(g.tolist()) != list(range(spec.n_sites)):
        return None
    return g


def _preserves_bonds(g: np.ndarray, bonds: BondSet) -> bool:
    for group in (bonds.j1_bonds, bonds.j2_bonds):
        mapped = {(min(int(g[a]), int(g[b])), max(int(g[a]), int(g[b]))) for a, b in group}
        if mapped != {(min(a, b), max(a, b)) for a, b in group}:
            return False
    return True


def _close_group(elems: list[tuple[int, ...]], n: int, cap: int = 4096) -> list[tuple[int, ...]]:
    ident = tuple(range(n))
    members = {ident, *elems}
    changed = True
    while changed:
        changed = False
        snapshot = list(members)
        for g in snapshot:
            for h in snapshot:
                gh = tuple(g[h[i]] for i in range(n))
                if gh not in members:
                    members.add(gh)
                    changed = True
                    if len(members) > cap:
                        raise LatticeError("symmetry group closure exceeded size cap")
    return [ident] + sorted(m for m in members if m != ident)


def _parse_momentum(label: str, spec: LatticeSpec) -> tuple[int, int] | None:
    if label == "trivial":
        return (0, 0)
    if label.startswith("k="):
        try:
            n1, n2 = (int(x) for x in label[2:].split(","))
        except ValueError as exc:
            raise LatticeError(f"bad momentum irrep label {label!r}") from exc
        return (n1, n2)
    return None


def symmetry_group(spec: LatticeSpec, selection: str, irrep: str = "trivial") -> SymmetryGroup:
    """Site-permutation group of the requested spatial symmetry.

    selection: "translations", "point_group", or "full".  Irreducible
    representation labels: "trivial" everywhere; translation groups also
    accept momentum labels "k=n1,n2" with characters exp(-2*pi*i*n.t/L).
    Every returned element is checked to map the bond set onto itself.
    """
    bonds = build_lattice(spec)
    if selection not in ("translations", "point_group", "full"):
        raise LatticeError(f"unknown symmetry selection {selection!r}")

    if selection in ("translations", "full") and not any(spec.periodic):
        raise LatticeError("translations require at least one periodic axis")

    trans: list[tuple[tuple[int, int], np.ndarray]] = []
    if selection in ("translations", "full"):
        trans = _translation_elements(spec)
        for _, g in trans:
            if not _preserves_bonds(g, bonds):
                raise LatticeError("translation does not preserve the bond set")

    centered_maps, extra_maps = _coord_maps(spec)

    def _valid_candidates(maps):
        out = []
        for m in maps:
            g = _map_to_permutation(spec, m)
            if g is not None and _preserves_bonds(g, bonds):
                out.append(tuple(g.tolist()))
        return out

    mom = _parse_momentum(irrep, spec)
    if mom is None:
        raise LatticeError(f"unknown irrep label {irrep!r}")
    if mom != (0, 0) and selection != "translations":
        raise LatticeError("momentum irreps are only defined for the translation group")

    if selection == "translations":
        ident = tuple(range(spec.n_sites))
        pairs = [(sh, tuple(g.tolist())) for sh, g in trans]
        ordered = [(sh, e) for sh, e in pairs if e == ident]
        ordered += sorted((sh, e) for sh, e in pairs if e != ident)
        l1, l2 = spec.extents
        n1, n2 = mom
        chars = tuple(
            cmath.exp(-2j * cmath.pi * (n1 * sh[0] / l1 + n2 * sh[1] / l2))
            for sh, _ in ordered
        )
        return SymmetryGroup(spec.n_sites, tuple(e for _, e in ordered), chars,
                             label=f"translations:{irrep}")

    if selection == "point_group":
        elems = _close_group(_valid_candidates(centered_maps), spec.n_sites, cap=128)
    else:
        gens = [tuple(g.tolist()) for _, g in trans]
        gens += _valid_candidates(centered_maps) + _valid_candidates(extra_maps)
        elems = _close_group(gens, spec.n_sites, cap=4096)
    for g in elems:
        if not _preserves_bonds(np.asarray(g), bonds):
            raise LatticeError("group closure left the bond-preserving set")

    chars = tuple(1.0 + 0j for _ in elems)
    return SymmetryGroup(spec.n_sites, tuple(elems), chars, label=f"{selection}:trivial")


def default_dimer_pairing(spec: LatticeSpec, pattern: str = "auto") -> tuple[Bond, ...]:
    """Perfect matching used as the circuit input state.

    Patterns: "columns" pairs (r, c)-(r+1, c) for even r, "rows" pairs within
    rows, "diagonal" pairs along the (1, 1) cell diagonal (triangular
    j2-aligned start), "cells" pairs the two sublattice sites of each
    hexagonal cell.  "auto" picks columns, falling back to rows, for square
    and triangular; cells for hexagonal.
    """
    l1, l2 = spec.extents
    if pattern == "auto":
        if spec.geometry == "hexagonal":
            pattern = "cells"
        elif l1 % 2 == 0:
            pattern = "columns"
        elif l2 % 2 == 0:
            pattern = "rows"
        else:
            raise LatticeError(f"no dimer pattern fits extents {spec.extents}")
    if pattern == "cells":
        if spec.geometry != "hexagonal":
            raise LatticeError("'cells' pairing requires the hexagonal geometry")
        return tuple((spec.site_index(r, c, 0), spec.site_index(r, c, 1))
                     for r in range(l1) for c in range(l2))
    if spec.geometry == "hexagonal":
        raise LatticeError(f"pairing {pattern!r} is not defined for the hexagonal geometry")
    if pattern == "columns":
        if l1 % 2 != 0:
            raise LatticeError(f"column pairing needs an even first extent, got {l1}")
        return tuple((spec.site_index(r, c), spec.site_index(r + 1, c))
                     for r in range(0, l1, 2) for c in range(l2))
    if pattern == "rows":
        if l2 % 2 != 0:
            raise LatticeError(f"row pairing needs an even second extent, got {l2}")
        return tuple((spec.site_index(r, c), spec.site_index(r, c + 1))
                     for r in range(l1) for c in range(0, l2, 2))
    if pattern == "diagonal":
        if l1 % 2 != 0:
            raise LatticeError(f"diagonal pairing needs an even first extent, got {l1}")
        if not spec.periodic[1] and l1 % 2 != 0:
            raise LatticeError("diagonal pairing needs periodic wrap or even extent")
        return tuple((spec.site_index(r, c), spec.site_index(*spec.shift(r, c, 1, 1)))
                     for r in range(0, l1, 2) for c in range(l2)
                     if spec.shift(r, c, 1, 1) is not None)
    raise LatticeError(f"unknown dimer pattern {pattern!r}")
