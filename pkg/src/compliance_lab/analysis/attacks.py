"""Reward difference of historical double-spend attacks under market response."""
from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass
from pathlib import Path

from ..errors import MalformedConfig

WINDOW_DAYS = 5
PRICE_COLUMNS = ("date", "asset", "price")
ATTACK_COLUMNS = ("asset", "date", "blocks", "block_reward", "external_utility")


def attack_reward_difference(price_after: float, btc_change: float, blocks: float, R: float) -> float:
    """price_after * btc_change * blocks * R, the literal product."""
    return price_after * btc_change * blocks * R


def counterfactual_difference(price_after: float, price_before: float, btc_change: float,
                              blocks: float, R: float) -> float:
    """Value of the attack's block rewards at the actual price minus at the BTC-tracking price."""
    return blocks * R * (price_after - price_before * (1 + btc_change))


@dataclass(frozen=True)
class AttackRow:
    asset: str
    date: str
    external_utility: float
    rewards: float
    reward_difference: float
    counterfactual_difference: float | None
    btc_change: float
    price_after: float

    @property
    def external_exceeds_loss(self) -> bool:
        return self.external_utility > -min(self.reward_difference, 0.0)


def _read(source, columns, what):
    text = Path(source).read_text() if not hasattr(source, "read") else source.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    header = rows[0].keys() if rows else next(csv.reader(io.StringIO(text)), [])
    missing = [c for c in columns if c not in header]
    if missing:
        raise MalformedConfig(f"missing columns {missing}", what)
    return rows


def load_prices(source) -> dict[tuple[str, str], float]:
    rows = _read(source, PRICE_COLUMNS, "prices")
    return {(r["asset"].strip(), r["date"].strip()): float(r["price"]) for r in rows}


def load_attacks(source) -> list[dict]:
    return _read(source, ATTACK_COLUMNS, "attacks")


def attack_report(prices, attacks) -> list[AttackRow]:
    """One row per attack: rewards at the post-window price and both reward-difference readings."""
    if not isinstance(prices, dict):
        prices = load_prices(prices)
    if not isinstance(attacks, list):
        attacks = load_attacks(attacks)
    out = []
    for a in attacks:
        asset, day = a["asset"].strip(), a["date"].strip()
        try:
            start = dt.date.fromisoformat(day)
        except ValueError as exc:
            raise MalformedConfig(f"bad date {day!r}", "attacks.date") from exc
        end = (start + dt.timedelta(days=WINDOW_DAYS)).isoformat()

        def price(sym, when):
            if (sym, when) not in prices:
                raise MalformedConfig(f"no {sym} price on {when}", "prices")
            return prices[(sym, when)]

        p_after = price(asset, end)
        btc0, btc1 = price("BTC", day), price("BTC", end)
        change = (btc1 - btc0) / btc0
        b, R = float(a["blocks"]), float(a["block_reward"])
        before = prices.get((asset, day))
        cf = None if before is None else counterfactual_difference(p_after, before, change, b, R)
        out.append(AttackRow(asset, day, float(a["external_utility"]), p_after * b * R,
                             attack_reward_difference(p_after, change, b, R), cf, change, p_after))
    return out


REPORT_HEADER = ["asset", "date", "external_utility", "rewards", "reward_difference",
                 "counterfactual_difference", "btc_change", "price_after", "external_exceeds_loss"]


def report_csv(rows: list[AttackRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in rows:
        w.writerow([r.asset, r.date, f"{r.external_utility:.2f}", f"{r.rewards:.2f}",
                    f"{r.reward_difference:.2f}",
                    "" if r.counterfactual_difference is None else f"{r.counterfactual_difference:.2f}",
                    f"{r.btc_change:.6f}", f"{r.price_after:.4f}", int(r.external_exceeds_loss)])
    return buf.getvalue()
