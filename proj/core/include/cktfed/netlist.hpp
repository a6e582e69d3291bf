#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cktfed {

enum class DeviceKind { NMOS, PMOS, NPN, PNP, R, C, L, D };

inline constexpr DeviceKind kAllDeviceKinds[] = {
    DeviceKind::NMOS, DeviceKind::PMOS, DeviceKind::NPN, DeviceKind::PNP,
    DeviceKind::R,    DeviceKind::C,    DeviceKind::L,   DeviceKind::D,
};

/// Pin role letter. MOS: D,G,S,B. BJT: C,B,E. Two-terminal: A,B.
enum class PinRole : char { D = 'D', G = 'G', S = 'S', B = 'B', C = 'C', E = 'E', A = 'A' };

enum class CircuitType {
    Opamp,
    Ldo,
    Bandgap,
    Comparator,
    Pll,
    Lna,
    Pa,
    Mixer,
    Vco,
    PowerConverter,
    Other,
};

inline constexpr std::size_t kCircuitTypeCount = 11;

std::string_view to_string(DeviceKind kind);
std::string_view to_string(CircuitType type);
std::optional<CircuitType> parse_circuit_type(std::string_view name);
CircuitType circuit_type_at(std::size_t index);

/// Canonical device id prefix: NM, PM, Q, R, C, L, D.
std::string_view kind_prefix(DeviceKind kind);
/// Ordered pin roles for a device kind.
std::span<const PinRole> pin_roles(DeviceKind kind);

/// Reserved terminal prefixes: VDD, VSS, GND, VIN, VOUT, VB, IB.
bool is_terminal_name(std::string_view net);
/// The reserved prefix a terminal name starts with, or empty.
std::string_view terminal_class(std::string_view net);
bool is_valid_net_name(std::string_view name);

struct Pin {
    PinRole role;
    std::string net;

    bool operator==(const Pin&) const = default;
};

struct Device {
    std::string id;
    DeviceKind kind;
    std::vector<Pin> pins;

    /// Pin token such as "NM1D".
    std::string pin_token(std::size_t pin_index) const;

    bool operator==(const Device&) const = default;
};

struct PinRef {
    std::string device;
    PinRole role;

    auto operator<=>(const PinRef&) const = default;
};

struct Circuit {
    std::string name;
    CircuitType type = CircuitType::Other;
    std::vector<Device> devices;
    std::map<std::string, std::set<PinRef>> nets;
    std::set<std::string> terminals;

    const Device* find_device(std::string_view id) const;
    std::size_t pin_count() const;

    bool operator==(const Circuit&) const = default;
};

/// Validates device invariants and derives nets and terminals.
Circuit make_circuit(std::string name, CircuitType type, std::vector<Device> devices);

Circuit parse_netlist(std::string_view text);
std::string render_netlist(const Circuit& circuit);

Circuit load_netlist(const std::filesystem::path& path);
/// All `*.ckt` files of a directory, sorted by file name.
std::vector<std::filesystem::path> list_netlists(const std::filesystem::path& dir);

/// Grows a connected random circuit with VDD, VSS, VIN1 and VOUT1 terminals.
Circuit generate_random_circuit(std::uint64_t seed, int n_devices, CircuitType type);

} // namespace cktfed
