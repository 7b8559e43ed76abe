"""Plain-text formats for lattices, chains, cocycles, descriptors, cones.

Grammar, one value per file (blank lines and '#' comments ignored):

  lattice     [1/s;] d; r11 r12 ...; r21 ...   rows of the basis matrix
  chain       dim=2 provider=diagpow primes=3,2 exps=j,j
              dim=2 provider=explicit          (lattice literals, one per line)
              dim=2 provider=derived cocycle=<path> [checked=3]
  cocycle     chain=<path> J=1 d2=2
              gen 1:
              rep (0,0) -> (1,0)
              ...
  descriptor  dim=2 shear=1,0,-1/2,1 supports=3|2
  cone        cone=quadrant dim=2 [strict=0,1]
              cone=sector u=1,0 v=0,1 [include=both|u|v|none]
              cone=facets dim=2 normals=0,1,>=;1,0,>

Parse errors carry line and column.  parse(emit(x)) reproduces x for every
emittable value.
"""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from .classify import SupergroupDescriptor
from .lattice import IntegerLattice, RationalLattice
from .odometer import DiagonalPowerProvider, ExplicitProvider, OdometerChain
from .speedup import Cone, PiecewiseCocycle, derived_odometer, validate


class SpecSyntaxError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


def _content_lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if stripped.strip():
            yield i, stripped


def _keyvals(line: str, lineno: int) -> dict[str, str]:
    out = {}
    for m in re.finditer(r"(\S+?)=(\S+)", line):
        out[m.group(1)] = m.group(2)
    if not out:
        raise SpecSyntaxError(lineno, 1, "expected key=value tokens")
    return out


# ---------------------------------------------------------------- lattices

def parse_lattice(text: str):
    """Integer or rational lattice from a literal; returns the typed value."""
    body = " ".join(s for _, s in _content_lines(text))
    if not body:
        raise SpecSyntaxError(1, 1, "empty lattice literal")
    parts = [p.strip() for p in body.split(";")]
    den = 1
    if re.fullmatch(r"1/\d+", parts[0]):
        den = int(parts[0][2:])
        parts = parts[1:]
    try:
        dim = int(parts[0])
    except (ValueError, IndexError):
        raise SpecSyntaxError(1, 1, "lattice literal must start with its dimension")
    rows = []
    for chunk in parts[1:]:
        if not chunk:
            continue
        try:
            rows.append([int(tok) for tok in chunk.split()])
        except ValueError:
            col = body.find(chunk) + 1
            raise SpecSyntaxError(1, col, f"bad integer row {chunk!r}")
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise SpecSyntaxError(1, 1, f"expected a {dim}x{dim} matrix")
    if den == 1:
        return IntegerLattice.from_rows(rows)
    return RationalLattice.from_scaled_rows(den, rows)


def emit_lattice(lat) -> str:
    if isinstance(lat, RationalLattice):
        prefix = f"1/{lat.den}; " if lat.den != 1 else ""
        rows = lat.num.rows
        return prefix + f"{lat.dim}; " + "; ".join(" ".join(str(e) for e in r) for r in rows)
    return f"{lat.dim}; " + "; ".join(" ".join(str(e) for e in r) for r in lat.rows)


# ---------------------------------------------------------------- chains

_EXP_RE = re.compile(r"^(\d*)j$|^(\d+)$")


def _parse_exponent(token: str, lineno: int) -> int:
    m = _EXP_RE.match(token)
    if not m:
        raise SpecSyntaxError(lineno, 1, f"bad exponent rule {token!r} (use j, 2j, ...)")
    if m.group(2) is not None:
        if int(m.group(2)) != 0:
            raise SpecSyntaxError(lineno, 1, "constant exponents other than 0 are not a rule")
        return 0
    return int(m.group(1)) if m.group(1) else 1


def parse_chain(text: str, base_dir: Path | None = None) -> OdometerChain:
    lines = list(_content_lines(text))
    if not lines:
        raise SpecSyntaxError(1, 1, "empty chain spec")
    lineno, header = lines[0]
    kv = _keyvals(header, lineno)
    provider = kv.get("provider")
    if provider is None:
        raise SpecSyntaxError(lineno, header.find("provider") + 1, "missing provider=")
    dim = int(kv["dim"]) if "dim" in kv else None
    if provider == "diagpow":
        primes = [int(p) for p in kv["primes"].split(",")]
        exps = [_parse_exponent(e, lineno) for e in kv.get("exps", "j").split(",")]
        if len(exps) == 1:
            exps = exps * len(primes)
        if dim is not None and dim != len(primes):
            raise SpecSyntaxError(lineno, 1, "dim does not match the prime list")
        return OdometerChain.diagonal_power(primes, exps)
    if provider == "explicit":
        lattices = []
        for ln, chunk in lines[1:]:
            lat = parse_lattice(chunk)
            if isinstance(lat, RationalLattice):
                raise SpecSyntaxError(ln, 1, "chain stages must be integer lattices")
            lattices.append(lat)
        if not lattices:
            raise SpecSyntaxError(lineno, 1, "explicit chains need at least one stage")
        if dim is not None and dim != lattices[0].dim:
            raise SpecSyntaxError(lineno, 1, "dim does not match the stage matrices")
        return OdometerChain.explicit(lattices)
    if provider == "derived":
        path = Path(kv["cocycle"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        cocycle = load_cocycle(path)
        return derived_odometer(cocycle, checked_depth=int(kv.get("checked", "3")))
    raise SpecSyntaxError(lineno, 1, f"unknown provider {provider!r}")


def emit_chain(chain: OdometerChain) -> str:
    prov = chain.provider
    if isinstance(prov, DiagonalPowerProvider):
        primes = ",".join(str(b) for b in prov.bases)
        exps = ",".join(("j" if a == 1 else ("0" if a == 0 else f"{a}j")) for a in prov.coeffs)
        return f"dim={chain.dim} provider=diagpow primes={primes} exps={exps}"
    if isinstance(prov, ExplicitProvider):
        head = f"dim={chain.dim} provider=explicit"
        return "\n".join([head] + [emit_lattice(lat) for lat in prov.lattices])
    raise ValueError("only rule-backed and explicit chains have a standalone file form")


def load_chain(path) -> OdometerChain:
    path = Path(path)
    return parse_chain(path.read_text(), base_dir=path.parent)


# ---------------------------------------------------------------- cocycles

_REP_RE = re.compile(r"^rep\s*\(([^)]*)\)\s*->\s*\(([^)]*)\)$")


def parse_cocycle(text: str, base_dir: Path | None = None, chain: OdometerChain | None = None) -> PiecewiseCocycle:
    lines = list(_content_lines(text))
    if not lines:
        raise SpecSyntaxError(1, 1, "empty cocycle spec")
    lineno, header = lines[0]
    kv = _keyvals(header, lineno)
    if chain is None:
        path = Path(kv["chain"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        chain = load_chain(path)
    depth = int(kv.get("J", "1"))
    d2 = int(kv["d2"])
    tables: list[dict] = []
    current: dict | None = None
    for ln, line in lines[1:]:
        m = re.match(r"^gen\s+(\d+)\s*:$", line.strip())
        if m:
            if int(m.group(1)) != len(tables) + 1:
                raise SpecSyntaxError(ln, 1, "generators must appear in order 1, 2, ...")
            current = {}
            tables.append(current)
            continue
        m = _REP_RE.match(line.strip())
        if not m:
            raise SpecSyntaxError(ln, 1, f"expected 'rep (...) -> (...)', got {line.strip()!r}")
        if current is None:
            raise SpecSyntaxError(ln, 1, "rep line before any 'gen i:' header")
        rep = tuple(int(t) for t in m.group(1).split(","))
        val = tuple(int(t) for t in m.group(2).split(","))
        current[rep] = val
    if len(tables) != d2:
        raise SpecSyntaxError(lineno, 1, f"expected {d2} generator tables, found {len(tables)}")
    return PiecewiseCocycle(chain, d2, depth, tuple(tables))


def emit_cocycle(cocycle: PiecewiseCocycle, chain_path: str) -> str:
    out = [f"chain={chain_path} J={cocycle.depth} d2={cocycle.d2}"]
    for i, table in enumerate(cocycle.tables, start=1):
        out.append(f"gen {i}:")
        for rep in sorted(table):
            out.append(
                "rep (" + ",".join(str(x) for x in rep) + ") -> ("
                + ",".join(str(x) for x in table[rep]) + ")"
            )
    return "\n".join(out)


def load_cocycle(path) -> PiecewiseCocycle:
    path = Path(path)
    cocycle = parse_cocycle(path.read_text(), base_dir=path.parent)
    validate(cocycle)
    return cocycle


# ---------------------------------------------------------------- descriptors

def parse_descriptor(text: str) -> SupergroupDescriptor:
    lines = list(_content_lines(text))
    if not lines:
        raise SpecSyntaxError(1, 1, "empty descriptor spec")
    lineno, header = lines[0]
    kv = _keyvals(header, lineno)
    dim = int(kv["dim"])
    entries = [Fraction(t) for t in kv["shear"].split(",")]
    if len(entries) != dim * dim:
        raise SpecSyntaxError(lineno, 1, f"shear needs {dim * dim} entries")
    shear = [entries[i * dim : (i + 1) * dim] for i in range(dim)]
    supports = []
    for chunk in kv["supports"].split("|"):
        chunk = chunk.strip()
        supports.append(set() if chunk in ("", "-") else {int(p) for p in chunk.split(",")})
    if len(supports) != dim:
        raise SpecSyntaxError(lineno, 1, f"supports need {dim} groups separated by |")
    return SupergroupDescriptor.make(shear, supports)


def emit_descriptor(desc: SupergroupDescriptor) -> str:
    shear = ",".join(str(e) for row in desc.shear for e in row)
    sups = "|".join(",".join(str(p) for p in sorted(s)) or "-" for s in desc.supports)
    return f"dim={desc.dim} shear={shear} supports={sups}"


def load_descriptor(path) -> SupergroupDescriptor:
    return parse_descriptor(Path(path).read_text())


# ---------------------------------------------------------------- cones

def parse_cone(text: str) -> Cone:
    lines = list(_content_lines(text))
    if not lines:
        raise SpecSyntaxError(1, 1, "empty cone spec")
    lineno, header = lines[0]
    kv = _keyvals(header, lineno)
    kind = kv.get("cone")
    if kind == "quadrant":
        dim = int(kv["dim"])
        strict = tuple(int(i) for i in kv["strict"].split(",")) if kv.get("strict") else ()
        return Cone.quadrant(dim, strict_axes=strict)
    if kind == "sector":
        u = tuple(int(t) for t in kv["u"].split(","))
        v = tuple(int(t) for t in kv["v"].split(","))
        include = kv.get("include", "both")
        return Cone.sector(u, v, include_u=include in ("both", "u"), include_v=include in ("both", "v"))
    if kind == "facets":
        dim = int(kv["dim"])
        normals = []
        for chunk in kv["normals"].split(";"):
            *coords, flag = chunk.split(",")
            if len(coords) != dim or flag not in (">", ">="):
                raise SpecSyntaxError(lineno, 1, f"bad facet {chunk!r}")
            normals.append((tuple(Fraction(c) for c in coords), flag == ">"))
        return Cone.from_facets(normals)
    raise SpecSyntaxError(lineno, 1, "cone kind must be quadrant, sector, or facets")


def emit_cone(cone: Cone) -> str:
    if cone.sector_data is not None:
        u, v, iu, iv = cone.sector_data
        include = {(True, True): "both", (True, False): "u", (False, True): "v", (False, False): "none"}[(iu, iv)]
        return (
            f"cone=sector u={','.join(str(x) for x in u)} v={','.join(str(x) for x in v)}"
            f" include={include}"
        )
    normals = ";".join(
        ",".join(str(e) for e in n) + "," + (">" if strict else ">=") for n, strict in cone.facets
    )
    return f"cone=facets dim={cone.dim} normals={normals}"


def load_cone(path) -> Cone:
    return parse_cone(Path(path).read_text())


# ---------------------------------------------------------------- sniffing

def load_group_input(path):
    """Descriptor or chain, decided by the file's keys (CLI convenience)."""
    path = Path(path)
    text = path.read_text()
    for _, line in _content_lines(text):
        if "shear=" in line:
            return parse_descriptor(text)
        break
    return parse_chain(text, base_dir=path.parent)
