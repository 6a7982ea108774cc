"""Arc-standard, arc-hybrid and arc-eager transition systems.

ROOT sits at the front of the buffer (index 0); index n+1 is the end marker,
which is never shifted. A configuration is terminal when the buffer holds only
the end marker and the stack is exactly [ROOT].
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import ParseTree, Sentence, is_projective


class SystemKind(str, enum.Enum):
    ARC_STANDARD = "standard"
    ARC_HYBRID = "hybrid"
    ARC_EAGER = "eager"


class Transition(str, enum.Enum):
    SH = "SH"   # shift
    RR = "RR"   # right-reduce: s1 -> s0
    LR = "LR"   # left-reduce: s0 <- s1 (standard) or s0 <- b0 (hybrid/eager)
    RA = "RA"   # right-attach: s0 -> b0, push b0
    RE = "RE"   # reduce an attached s0

    def __repr__(self):
        return self.value


SH, RR, LR, RA, RE = Transition.SH, Transition.RR, Transition.LR, Transition.RA, Transition.RE

TRANSITIONS = {
    SystemKind.ARC_STANDARD: (SH, RR, LR),
    SystemKind.ARC_HYBRID: (SH, RR, LR),
    SystemKind.ARC_EAGER: (SH, RA, LR, RE),
}


def system_kind(value) -> SystemKind:
    return value if isinstance(value, SystemKind) else SystemKind(value)


class IllegalTransition(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    """Stack of token indices (last = s0), buffer front k (buffer = w_k..w_n, end marker)
    and one head slot per index 0..n+1 (-1 while unattached)."""

    n: int
    stack: tuple[int, ...]
    buffer_front: int
    heads: tuple[int, ...]

    @property
    def arcs(self) -> frozenset[tuple[int, int]]:
        return frozenset((h, m) for m, h in enumerate(self.heads) if h >= 0)

    def attached(self, i: int) -> bool:
        return self.heads[i] >= 0

    def s(self, j: int) -> int | None:
        """Index of the j-th stack element from the top, or None."""
        return self.stack[-1 - j] if j < len(self.stack) else None

    @property
    def b0(self) -> int:
        return self.buffer_front

    def _attach(self, h: int, m: int) -> tuple[int, ...]:
        heads = list(self.heads)
        heads[m] = h
        return tuple(heads)


def initial(sentence: Sentence | int) -> Configuration:
    n = sentence if isinstance(sentence, int) else sentence.n
    if n < 1:
        raise ValueError("sentence must have at least one token")
    return Configuration(n, (), 0, (-1,) * (n + 2))


def is_terminal(config: Configuration) -> bool:
    return config.buffer_front == config.n + 1 and config.stack == (0,)


def _violation(c: Configuration, t: Transition, system: SystemKind) -> str | None:
    if t not in TRANSITIONS[system]:
        return f"{t.value} is not a transition of the {system.value} system"
    depth = len(c.stack)
    buffer_open = c.buffer_front <= c.n
    if t is SH:
        return None if buffer_open else "buffer holds only the end marker"
    if t is RA:
        if depth == 0:
            return "stack is empty"
        return None if buffer_open else "buffer holds only the end marker"
    if t is RR:
        return None if depth >= 2 else "stack has fewer than two elements"
    if t is RE:
        if depth == 0:
            return "stack is empty"
        return None if c.attached(c.stack[-1]) else "s0 has not been attached to its head"
    # LR
    if system is SystemKind.ARC_STANDARD:
        if depth < 2:
            return "stack has fewer than two elements"
        return "ROOT cannot be a modifier" if c.stack[-2] == 0 else None
    if depth == 0:
        return "stack is empty"
    if c.stack[-1] == 0:
        return "ROOT cannot be a modifier"
    if not buffer_open:
        return "buffer holds only the end marker"
    if system is SystemKind.ARC_EAGER and c.attached(c.stack[-1]):
        return "s0 is already attached"
    return None


def legal(config: Configuration, system) -> tuple[Transition, ...]:
    """Applicable transitions, in the system's canonical order."""
    system = system_kind(system)
    return tuple(t for t in TRANSITIONS[system] if _violation(config, t, system) is None)


def apply(config: Configuration, t: Transition, system) -> Configuration:
    system = system_kind(system)
    t = Transition(t)
    why = _violation(config, t, system)
    if why is not None:
        raise IllegalTransition(f"{t.value}: {why}")
    c = config
    if t is SH:
        return Configuration(c.n, c.stack + (c.b0,), c.b0 + 1, c.heads)
    if t is RA:
        return Configuration(c.n, c.stack + (c.b0,), c.b0 + 1, c._attach(c.stack[-1], c.b0))
    if t is RE:
        return Configuration(c.n, c.stack[:-1], c.b0, c.heads)
    if t is RR:
        s1, s0 = c.stack[-2], c.stack[-1]
        return Configuration(c.n, c.stack[:-1], c.b0, c._attach(s1, s0))
    if system is SystemKind.ARC_STANDARD:
        s1, s0 = c.stack[-2], c.stack[-1]
        return Configuration(c.n, c.stack[:-2] + (s0,), c.b0, c._attach(s0, s1))
    return Configuration(c.n, c.stack[:-1], c.b0, c._attach(c.b0, c.stack[-1]))


def is_viable(config: Configuration, system) -> bool:
    """Whether some transition sequence still reaches a terminal configuration.

    Only arc-eager has dead ends: an unattached token on the stack needs a
    head from the buffer, so it is stranded once only the end marker remains.
    """
    if system_kind(system) is not SystemKind.ARC_EAGER or config.buffer_front <= config.n:
        return True
    return all(config.attached(i) for i in config.stack if i != 0)


def viable(config: Configuration, system) -> tuple[Transition, ...]:
    """Legal transitions whose result can still be completed."""
    system = system_kind(system)
    return tuple(t for t in legal(config, system) if is_viable(apply(config, t, system), system))


def replay(sequence: Iterable[Transition], n: int, system) -> list[Configuration]:
    """Configurations c_0..c_T visited by the sequence; raises at the first illegal step."""
    system = system_kind(system)
    configs = [initial(n)]
    for step, t in enumerate(sequence):
        try:
            configs.append(apply(configs[-1], t, system))
        except IllegalTransition as exc:
            raise IllegalTransition(f"step {step}: {exc}") from None
    return configs


def sequence_to_tree(sequence: Sequence[Transition], sentence: Sentence | int, system) -> ParseTree:
    n = sentence if isinstance(sentence, int) else sentence.n
    if not sequence:
        raise ValueError("empty transition sequence")
    final = replay(sequence, n, system)[-1]
    if not is_terminal(final):
        raise ValueError("sequence does not reach a terminal configuration")
    heads = final.heads[1:n + 1]
    missing = [m for m, h in enumerate(heads, start=1) if h < 0]
    if missing:
        raise ValueError(f"tokens left unattached: {missing}")
    return ParseTree(heads)


def gold_heads(gold) -> tuple[int, ...]:
    """Gold heads indexed 0..n (slot 0 unused)."""
    if isinstance(gold, Sentence):
        gold = gold.gold_tree
    if isinstance(gold, ParseTree):
        return (-1,) + gold.heads
    return (-1,) + tuple(gold)


def _complete(c: Configuration, gold: tuple[int, ...], i: int) -> bool:
    """All gold dependents of i already attached."""
    return all(c.attached(m) for m in range(1, c.n + 1) if gold[m] == i)


def static_oracle(sentence, system) -> list[Transition]:
    """Canonical gold sequence: attach and reduce as early as the gold tree allows."""
    system = system_kind(system)
    gold = gold_heads(sentence)
    n = len(gold) - 1
    if not is_projective(gold[1:]):
        raise ValueError("gold tree is not projective")
    c = initial(n)
    seq = []
    while not is_terminal(c):
        t = _oracle_step(c, gold, system)
        seq.append(t)
        c = apply(c, t, system)
    return seq


def _oracle_step(c: Configuration, gold, system: SystemKind) -> Transition:
    s0, s1, b0 = c.s(0), c.s(1), c.buffer_front
    ok = set(legal(c, system))
    if system is SystemKind.ARC_STANDARD:
        if LR in ok and gold[s1] == s0 and _complete(c, gold, s1):
            return LR
        if RR in ok and gold[s0] == s1 and _complete(c, gold, s0):
            return RR
    elif system is SystemKind.ARC_HYBRID:
        if LR in ok and gold[s0] == b0:
            return LR
        if RR in ok and gold[s0] == s1 and _complete(c, gold, s0):
            return RR
    else:
        if LR in ok and gold[s0] == b0:
            return LR
        if RA in ok and gold[b0] == s0:
            return RA
        if RE in ok and _complete(c, gold, s0):
            return RE
    if SH in ok:
        return SH
    raise ValueError("static oracle is stuck; gold tree cannot be derived")


def _reachable(c: Configuration, gold, m: int, system: SystemKind) -> bool:
    """Whether the gold arc into m can still be built (taken individually)."""
    h = gold[m]
    if c.attached(m):
        return c.heads[m] == h
    b0, n = c.buffer_front, c.n
    in_buffer = lambda i: b0 <= i <= n
    if b0 == 0:
        return True
    if in_buffer(m):
        return in_buffer(h) or h in c.stack
    # m is on the stack and unattached
    if in_buffer(h):
        return True
    if system is SystemKind.ARC_HYBRID:
        pos = c.stack.index(m)
        return pos > 0 and c.stack[pos - 1] == h
    return False


def _stranding_loss(c: Configuration, gold, reachable) -> int:
    """Extra arc-eager loss forced by the last token.

    Token n can only be right-attached, and at that moment every stack
    element at or below its head must already be attached, or it is stranded
    with nothing left to take it. So no gold ancestor of n sitting at or above
    the lowest unattached stack token can remain an ancestor of n: one arc on
    its gold path down to n must go.
    """
    if c.buffer_front > c.n:
        return 0
    stack = c.stack
    low = next((k for k, x in enumerate(stack) if x != 0 and not c.attached(x)), None)
    if low is None:
        return 0
    spine = set()
    node = c.n
    while node != 0:
        node = gold[node]
        spine.add(node)
    above = [x for x in stack[low:] if x in spine]
    if not above:
        return 0
    node = c.n
    while node != above[-1]:
        if not reachable[node]:
            return 0
        node = gold[node]
    return 1


def oracle_loss(config: Configuration, gold, system) -> int:
    """Fewest mis-attached tokens over all completions of a viable configuration."""
    system = system_kind(system)
    gold = gold if isinstance(gold, tuple) and gold[:1] == (-1,) else gold_heads(gold)
    reachable = [True] + [_reachable(config, gold, m, system) for m in range(1, config.n + 1)]
    loss = reachable.count(False)
    if system is SystemKind.ARC_EAGER:
        loss += _stranding_loss(config, gold, reachable)
    return loss


def dynamic_oracle_cost(config: Configuration, t: Transition, gold, system) -> int:
    """Number of gold arcs made unreachable by taking ``t`` (arc-decomposition oracle)."""
    system = system_kind(system)
    if system is SystemKind.ARC_STANDARD:
        raise NotImplementedError("no dynamic oracle for arc-standard; use static_oracle")
    gold = gold_heads(gold)
    nxt = apply(config, t, system)
    if not is_viable(nxt, system):
        raise ValueError(f"{Transition(t).value} leads to a configuration with no completion")
    return oracle_loss(nxt, gold, system) - oracle_loss(config, gold, system)
