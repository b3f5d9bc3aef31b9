#include "icsrange/plant/plant_config.hpp"
#include "icsrange/testbed/testbed.hpp"

namespace icsrange::testbed {

namespace {

// Raw water tank T101 and the transfer pumps to the ultra-filtration tank.
constexpr const char* kPlc1Program = R"(# stage 1: raw water
SETPOINT LOW = 0.25;
SETPOINT HIGH = 0.80;
SETPOINT UF_LOW = 0.40;
SETPOINT UF_HIGH = 0.80;
SETPOINT UF_BOOST = 0.20;
SETPOINT RAW_MIN = 0.10;
SETPOINT RAW_RESUME = 0.15;

RUNG LIT101 < LOW THEN CMD MV101 OPEN;
RUNG LIT101 > HIGH THEN CMD MV101 CLOSE;
RUNG LIT301 < UF_LOW AND LIT101 > RAW_RESUME THEN CMD P101 ON;
RUNG LIT301 > UF_HIGH OR LIT101 < RAW_MIN THEN CMD P101 OFF;
# standby pump assists only when the UF tank runs nearly dry
RUNG LIT301 < UF_BOOST AND LIT101 > RAW_RESUME THEN CMD P102 ON;
RUNG LIT301 > UF_LOW OR LIT101 < RAW_MIN THEN CMD P102 OFF;
)";

constexpr const char* kPlc1Invariants = R"(# mass balance of T101 from the metered flows
SA :: BALANCE(LIT101, FIT101, FIT201, 1.5) WINDOW 10 TOL 0.01
# filling with every outlet closed never lowers the level
SD MV101 == OPEN AND P101 == OFF AND P102 == OFF :: DELTA(LIT101) >= 0 WINDOW 10 TOL 0
)";

constexpr const char* kPlc2Program = R"(# stage 2: chemical dosing
SETPOINT DOSE_LOW = 2.0;
SETPOINT DOSE_HIGH = 3.0;
SETPOINT DOSE_MAX = 3.5;

RUNG FIT201 > 0 AND AIT201 < DOSE_LOW THEN CMD P201 ON;
RUNG AIT201 > DOSE_HIGH OR FIT201 <= 0 THEN CMD P201 OFF;
)";

constexpr const char* kPlc2Invariants = R"(SA :: AIT201 <= DOSE_MAX WINDOW 10 TOL 0
)";

constexpr const char* kPlc3Program = R"(# stage 3: ultra-filtration
SETPOINT UF_START = 0.50;
SETPOINT UF_STOP = 0.30;
SETPOINT UF_MAX = 0.95;
SETPOINT BACKWASH_TRIGGER = 30;
SETPOINT BACKWASH_DURATION = 5;
SETPOINT TICK = 0.1;

RUNG LIT301 > UF_START THEN CMD P301 ON;
RUNG LIT301 < UF_STOP THEN CMD P301 OFF;
RUNG P301 == ON AND UF_BACKWASH == STOPPED THEN SET UF_RUNTIME = UF_RUNTIME + TICK;
RUNG UF_RUNTIME >= BACKWASH_TRIGGER THEN CMD UF_BACKWASH START, SET UF_RUNTIME = 0, SET BW_TIMER = 0;
RUNG UF_BACKWASH == RUNNING THEN SET BW_TIMER = BW_TIMER + TICK;
RUNG UF_BACKWASH == RUNNING AND BW_TIMER >= BACKWASH_DURATION THEN CMD UF_BACKWASH STOP;
)";

constexpr const char* kPlc3Invariants = R"(SA :: LIT301 <= UF_MAX WINDOW 10 TOL 0
)";

constexpr const char* kPlc4Program = R"(# stage 4: reverse osmosis feed protection
SETPOINT HARDNESS_LIMIT = 200;
SETPOINT HARDNESS_RESUME = 150;

RUNG AIT401 > HARDNESS_LIMIT THEN CMD RO STOP;
RUNG AIT401 < HARDNESS_RESUME THEN CMD RO START;
)";

}  // namespace

std::vector<plc::PlcConfig> default_plcs(const Flags& flags) {
  std::vector<plc::PlcConfig> out;
  out.push_back({"PLC1", kPlc1Program, kPlc1Invariants, {"MV101", "P101", "P102"}, {}, 0.1});
  out.push_back({"PLC2",
                 kPlc2Program,
                 kPlc2Invariants,
                 {"P201"},
                 {{"README:2", flags.readme, false}},
                 0.1});
  out.push_back({"PLC3",
                 kPlc3Program,
                 kPlc3Invariants,
                 {"P301", "UF_BACKWASH"},
                 {{"HB", std::int64_t{2}, true},
                  {"FLAG:1", std::string(), true},
                  {"UF_RUNTIME", 0.0, true},
                  {"BW_TIMER", 0.0, true}},
                 0.1});
  out.push_back({"PLC4", kPlc4Program, "", {"RO"}, {}, 0.1});
  out.push_back({"PLC5", "", "", {}, {}, 0.1});
  out.push_back({"PLC6", "", "", {}, {}, 0.1});
  return out;
}

std::vector<RioWiring> default_wiring() {
  return {
      {"RIO1", "PLC1", {"LIT101", "FIT101", "FIT201", "MV101", "P101", "P102"},
       {"MV101", "P101", "P102"}},
      {"RIO2", "PLC2", {"AIT201", "P201"}, {"P201"}},
      {"RIO3", "PLC3", {"LIT301", "FIT301", "PIT301", "P301", "UF_BACKWASH"},
       {"P301", "UF_BACKWASH"}},
      {"RIO4", "PLC4", {"AIT401", "RO"}, {"RO"}},
  };
}

TestbedConfig default_config() {
  TestbedConfig c;
  c.plant = plant::default_plant();
  c.topology = net::default_topology();
  c.plcs = default_plcs(c.flags);
  c.wiring = default_wiring();
  c.exchanges = {
      {"PLC1", "PLC2", "FIT201", "FIT201", std::nullopt},
      {"PLC3", "PLC1", "LIT301", "LIT301", std::nullopt},
      {"PLC2", "PLC3", "WIRE", "FLAG:1", c.flags.wire},
  };
  c.hmi_tags = {
      {"PLC1", {"LIT101", "FIT101", "FIT201", "MV101", "P101", "P102"}},
      {"PLC2", {"AIT201", "P201"}},
      {"PLC3", {"LIT301", "FIT301", "PIT301", "P301", "HB"}},
      {"PLC4", {"AIT401", "RO"}},
  };
  return c;
}

}  // namespace icsrange::testbed
