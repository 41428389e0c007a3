"""CFR for the four bundled operating scenarios under each network variant."""

from credalcfr.cfr import NETWORK_VARIANTS, case_study_network, case_study_scenarios, evaluate_scenario

scenarios = case_study_scenarios()
for variant, about in NETWORK_VARIANTS.items():
    net = case_study_network("TL1", variant)
    print(f"{variant}: {about}")
    for name, sc in scenarios.items():
        iv = evaluate_scenario(net, sc)
        value = f"{iv.lower:.3e}" if iv.is_point else f"[{iv.lower:.3e}, {iv.upper:.3e}]"
        print(f"  {name:4s} {value:28s} {sc.description}")
    print()
