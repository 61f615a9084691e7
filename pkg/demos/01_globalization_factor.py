"""Derive the globalization factor from the bundled index table.

The weight on global quality comes from a 0-100 globalization index:
alpha = index / 100. A highly interconnected region keeps more weight on
global capability; a more locally oriented region shifts weight toward
regional quality.
"""

from ggez import GlobalizationTable, derive_alpha

table = GlobalizationTable.bundled()

print("Regions in the bundled table:", ", ".join(table.regions()))
print()

alpha_sea = derive_alpha(table, "SEA", 2023)
print(f"SEA 2023 index  = {table.value('SEA', 2023):.2f}")
print(f"alpha (SEA)     = {alpha_sea:.4f}  (conventional rounding: {alpha_sea:.2f})")
print(f"regional weight = {1 - alpha_sea:.4f}")
print()

print("alpha per region, 2023:")
for region in table.regions():
    print(f"  {region:<6} {derive_alpha(table, region, 2023):.4f}")
print()

print("SEA alpha over time (the optimization target drifts with the index):")
for year in range(1993, 2024, 5):
    alpha = derive_alpha(table, "SEA", year)
    bar = "#" * round(alpha * 60)
    print(f"  {year}  {alpha:.4f}  {bar}")
