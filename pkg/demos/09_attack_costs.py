"""
Reward difference of a historical double-spend
==============================================

Price the block rewards of an attack window against the BTC trend.
"""
from compliance_lab.analysis.attacks import attack_report, load_attacks, load_prices, report_csv
from compliance_lab.cli import data_path

prices = load_prices(data_path("fixtures", "etc_2020-08-01_prices.csv"))
attacks = load_attacks(data_path("fixtures", "etc_2020-08-01_attacks.csv"))
rows = attack_report(prices, attacks)
for r in rows:
    print(f"{r.asset} {r.date}: rewards ${r.rewards:,.0f}, reward difference ${r.reward_difference:,.2f}, "
          f"external gain covers the loss: {r.external_exceeds_loss}")
print(report_csv(rows))
