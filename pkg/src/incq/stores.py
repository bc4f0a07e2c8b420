"""Counted keyed maps (tries) and multi-layout relation stores."""

from __future__ import annotations

from typing import Iterator


class CountedMap:
    """Map from key tuples to image sets, one trie level per key component.

    Counted maps keep a derivation count per (key, value) and hold the value
    while the count is at least one. Uncounted maps are plain sets of values
    per key and reject adding a present value or removing an absent one.
    """

    __slots__ = ("key_arity", "counted", "root", "_size")

    def __init__(self, key_arity: int, counted: bool = True):
        self.key_arity = key_arity
        self.counted = counted
        self.root: dict = {}
        self._size = 0

    # -- navigation ----------------------------------------------------
    def _leaf(self, key: tuple, create: bool):
        node = self.root
        for k in key:
            nxt = node.get(k)
            if nxt is None:
                if not create:
                    return None
                nxt = node[k] = {}
            node = nxt
        return node

    def _prune(self, key: tuple) -> None:
        path = [self.root]
        for k in key:
            path.append(path[-1][k])
        for depth in range(len(key), 0, -1):
            if path[depth]:
                break
            del path[depth - 1][key[depth - 1]]

    # -- queries -------------------------------------------------------
    def image(self, key: tuple = ()):
        """Live view of the values under ``key`` (empty when the key is absent)."""
        leaf = self._leaf(key, False)
        return leaf.keys() if leaf is not None else ()

    def in_domain(self, key: tuple) -> bool:
        return bool(self._leaf(key, False))

    def contains(self, key: tuple, value) -> bool:
        leaf = self._leaf(key, False)
        return leaf is not None and value in leaf

    def count(self, key: tuple, value) -> int:
        leaf = self._leaf(key, False)
        return 0 if leaf is None else leaf.get(value, 0)

    def __len__(self) -> int:
        return self._size

    def num_keys(self) -> int:
        return sum(1 for _ in self._walk(self.root, (), self.key_arity))

    def _walk(self, node, prefix, depth) -> Iterator:
        if depth == 0:
            yield prefix, node
            return
        for k, child in node.items():
            yield from self._walk(child, prefix + (k,), depth - 1)

    def items(self) -> Iterator[tuple[tuple, object, int]]:
        for key, leaf in self._walk(self.root, (), self.key_arity):
            for v, c in leaf.items():
                yield key, v, c

    def keys(self) -> Iterator[tuple]:
        for key, _ in self._walk(self.root, (), self.key_arity):
            yield key

    def snapshot(self) -> dict:
        return {(k, v): c for k, v, c in self.items()}

    # -- updates -------------------------------------------------------
    def cadd(self, key: tuple, value) -> bool:
        """Counted addition; True when the value became present."""
        assert self.counted, "cadd on an uncounted map"
        leaf = self._leaf(key, True)
        c = leaf.get(value, 0)
        leaf[value] = c + 1
        if c == 0:
            self._size += 1
            return True
        return False

    def cdel(self, key: tuple, value) -> bool:
        """Counted deletion; True when the value disappeared."""
        assert self.counted, "cdel on an uncounted map"
        leaf = self._leaf(key, False)
        if leaf is None or value not in leaf:
            raise KeyError(f"cdel of absent {key!r} -> {value!r}")
        c = leaf[value]
        if c > 1:
            leaf[value] = c - 1
            return False
        del leaf[value]
        self._size -= 1
        if not leaf:
            self._prune(key)
        return True

    def add(self, key: tuple, value) -> None:
        assert not self.counted, "plain add on a counted map"
        leaf = self._leaf(key, True)
        if value in leaf:
            raise KeyError(f"add of present {key!r} -> {value!r}")
        leaf[value] = 1
        self._size += 1

    def remove(self, key: tuple, value) -> None:
        assert not self.counted, "plain remove on a counted map"
        leaf = self._leaf(key, False)
        if leaf is None or value not in leaf:
            raise KeyError(f"remove of absent {key!r} -> {value!r}")
        del leaf[value]
        self._size -= 1
        if not leaf:
            self._prune(key)


def _split(t: tuple, key: tuple[int, ...], rest: tuple[int, ...]):
    k = tuple(t[i] for i in key)
    v = t[rest[0]] if len(rest) == 1 else tuple(t[i] for i in rest)
    return k, v


class RelStore:
    """A relation kept in one or more keyed layouts.

    The first layout is primary and carries the counts of a counted relation;
    further layouts mirror presence only and change on 0/1 transitions.
    """

    def __init__(self, name: str, arity: int, counted: bool, keys: list[tuple[int, ...]]):
        self.name = name
        self.arity = arity
        self.counted = counted
        self.layouts: dict[tuple[int, ...], tuple[tuple[int, ...], CountedMap]] = {}
        for n, key in enumerate(keys):
            rest = tuple(i for i in range(arity) if i not in key)
            self.layouts[key] = (rest, CountedMap(len(key), counted and n == 0))
        self.primary = keys[0]

    def _primary(self):
        rest, m = self.layouts[self.primary]
        return self.primary, rest, m

    def contains(self, t: tuple) -> bool:
        key, rest, m = self._primary()
        k, v = _split(t, key, rest)
        return m.contains(k, v)

    def count(self, t: tuple) -> int:
        key, rest, m = self._primary()
        k, v = _split(t, key, rest)
        return m.count(k, v)

    def will_vanish(self, t: tuple) -> bool:
        """Whether removing one derivation of ``t`` makes it absent."""
        return self.count(t) == 1

    def _mirror(self, t: tuple, adding: bool) -> None:
        for key, (rest, m) in self.layouts.items():
            if key == self.primary:
                continue
            k, v = _split(t, key, rest)
            if adding:
                m.add(k, v)
            else:
                m.remove(k, v)

    def insert(self, t: tuple) -> bool:
        """Add one derivation (counted) or the tuple (uncounted); True on a 0->1 change."""
        key, rest, m = self._primary()
        k, v = _split(t, key, rest)
        if self.counted:
            new = m.cadd(k, v)
        else:
            m.add(k, v)
            new = True
        if new:
            self._mirror(t, True)
        return new

    def delete(self, t: tuple) -> bool:
        key, rest, m = self._primary()
        k, v = _split(t, key, rest)
        if self.counted:
            gone = m.cdel(k, v)
        else:
            m.remove(k, v)
            gone = True
        if gone:
            self._mirror(t, False)
        return gone

    def layout(self, key: tuple[int, ...]) -> CountedMap:
        return self.layouts[key][1]

    def image(self, key: tuple[int, ...], values: tuple):
        return self.layouts[key][1].image(values)

    def select(self, out: tuple[int, ...], key: tuple[int, ...], values: tuple) -> set:
        """Image set ``img R.out/key=values`` with components in the order of ``out``."""
        rest, m = self.layouts[key]
        res = set()
        for v in m.image(values):
            # key components may be selected too, so rebuild the whole tuple
            t = dict(zip(key, values))
            t.update(zip(rest, (v,) if len(rest) == 1 else v))
            res.add(tuple(t[c] for c in out))
        return res

    def tuples(self) -> Iterator[tuple]:
        key, rest, m = self._primary()
        for k, v, _ in m.items():
            t = [None] * self.arity
            for i, x in zip(key, k):
                t[i] = x
            vs = (v,) if len(rest) == 1 else v
            for i, x in zip(rest, vs):
                t[i] = x
            yield tuple(t)

    def counts(self) -> dict[tuple, int]:
        return {t: self.count(t) for t in self.tuples()}

    def __len__(self) -> int:
        return len(self._primary()[2])

    def size(self) -> int:
        """Live elements summed over every layout."""
        return sum(len(m) for _, m in self.layouts.values())
