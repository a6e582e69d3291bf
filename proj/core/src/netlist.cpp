#include "cktfed/netlist.hpp"

#include "cktfed/error.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

namespace cktfed {

namespace {

constexpr std::array<std::string_view, kCircuitTypeCount> kTypeNames = {
    "OPAMP", "LDO", "BANDGAP", "COMPARATOR", "PLL", "LNA",
    "PA",    "MIXER", "VCO",   "CONVERTER",  "OTHER",
};

// Longer prefixes first so VOUT is not mistaken for something shorter.
constexpr std::array<std::string_view, 7> kTerminalPrefixes = {
    "VOUT", "VDD", "VSS", "GND", "VIN", "VB", "IB",
};

constexpr PinRole kMosRoles[] = {PinRole::D, PinRole::G, PinRole::S, PinRole::B};
constexpr PinRole kBjtRoles[] = {PinRole::C, PinRole::B, PinRole::E};
constexpr PinRole kTwoRoles[] = {PinRole::A, PinRole::B};

struct Token {
    std::string_view text;
    int column;
};

std::vector<Token> split_line(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

} // namespace

std::string_view to_string(DeviceKind kind) {
    switch (kind) {
    case DeviceKind::NMOS: return "NMOS";
    case DeviceKind::PMOS: return "PMOS";
    case DeviceKind::NPN: return "NPN";
    case DeviceKind::PNP: return "PNP";
    case DeviceKind::R: return "R";
    case DeviceKind::C: return "C";
    case DeviceKind::L: return "L";
    case DeviceKind::D: return "D";
    }
    return "?";
}

std::string_view to_string(CircuitType type) { return kTypeNames[static_cast<std::size_t>(type)]; }

std::optional<CircuitType> parse_circuit_type(std::string_view name) {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i)
        if (kTypeNames[i] == name) return static_cast<CircuitType>(i);
    return std::nullopt;
}

CircuitType circuit_type_at(std::size_t index) {
    return static_cast<CircuitType>(index % kCircuitTypeCount);
}

std::string_view kind_prefix(DeviceKind kind) {
    switch (kind) {
    case DeviceKind::NMOS: return "NM";
    case DeviceKind::PMOS: return "PM";
    case DeviceKind::NPN:
    case DeviceKind::PNP: return "Q";
    case DeviceKind::R: return "R";
    case DeviceKind::C: return "C";
    case DeviceKind::L: return "L";
    case DeviceKind::D: return "D";
    }
    return "";
}

std::span<const PinRole> pin_roles(DeviceKind kind) {
    switch (kind) {
    case DeviceKind::NMOS:
    case DeviceKind::PMOS: return kMosRoles;
    case DeviceKind::NPN:
    case DeviceKind::PNP: return kBjtRoles;
    default: return kTwoRoles;
    }
}

std::string_view terminal_class(std::string_view net) {
    for (auto prefix : kTerminalPrefixes)
        if (net.starts_with(prefix)) return prefix;
    return {};
}

bool is_terminal_name(std::string_view net) { return !terminal_class(net).empty(); }

bool is_valid_net_name(std::string_view name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

std::string Device::pin_token(std::size_t pin_index) const {
    return id + static_cast<char>(pins.at(pin_index).role);
}

const Device* Circuit::find_device(std::string_view id) const {
    for (const auto& d : devices)
        if (d.id == id) return &d;
    return nullptr;
}

std::size_t Circuit::pin_count() const {
    std::size_t n = 0;
    for (const auto& d : devices) n += d.pins.size();
    return n;
}

Circuit make_circuit(std::string name, CircuitType type, std::vector<Device> devices) {
    if (devices.empty()) throw Error(ErrorCode::EmptyCircuit, "circuit '" + name + "' has no devices");
    Circuit c;
    c.name = std::move(name);
    c.type = type;
    std::unordered_set<std::string> seen;
    for (const auto& d : devices) {
        auto roles = pin_roles(d.kind);
        if (d.pins.size() != roles.size())
            throw Error(ErrorCode::ArityMismatch, "device " + d.id + " has " + std::to_string(d.pins.size()) +
                                                      " pins, expected " + std::to_string(roles.size()));
        for (std::size_t i = 0; i < roles.size(); ++i) {
            if (d.pins[i].role != roles[i])
                throw Error(ErrorCode::InvalidCircuit, "device " + d.id + " pin roles out of order");
            if (!is_valid_net_name(d.pins[i].net))
                throw Error(ErrorCode::InvalidCircuit, "device " + d.id + " has invalid net name");
        }
        auto prefix = kind_prefix(d.kind);
        if (!d.id.starts_with(prefix) || d.id.size() <= prefix.size() || !is_valid_net_name(d.id))
            throw Error(ErrorCode::InvalidCircuit,
                        "device id '" + d.id + "' must start with '" + std::string(prefix) + "'");
        if (!seen.insert(d.id).second) throw Error(ErrorCode::DuplicateDeviceId, "duplicate device id " + d.id);
        for (const auto& p : d.pins) {
            c.nets[p.net].insert(PinRef{d.id, p.role});
            if (is_terminal_name(p.net)) c.terminals.insert(p.net);
        }
    }
    c.devices = std::move(devices);
    return c;
}

Circuit parse_netlist(std::string_view text) {
    enum class State { Header, Body, Done } state = State::Header;
    std::string name;
    CircuitType type = CircuitType::Other;
    std::vector<Device> devices;
    std::unordered_set<std::string> ids;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto toks = split_line(line);
        if (toks.empty()) {
            if (eol == text.size()) break;
            continue;
        }
        const auto& head = toks[0];
        if (state == State::Done) throw SyntaxError(line_no, head.column, "content after .end");
        if (state == State::Header) {
            if (head.text != ".circuit") throw SyntaxError(line_no, head.column, "expected '.circuit' header");
            if (toks.size() != 3) throw SyntaxError(line_no, head.column, "header is '.circuit <name> <TYPE>'");
            if (!is_valid_net_name(toks[1].text)) throw SyntaxError(line_no, toks[1].column, "invalid circuit name");
            auto t = parse_circuit_type(toks[2].text);
            if (!t) throw SyntaxError(line_no, toks[2].column, "unknown circuit type '" + std::string(toks[2].text) + "'");
            name = std::string(toks[1].text);
            type = *t;
            state = State::Body;
            if (eol == text.size()) break;
            continue;
        }
        if (head.text == ".end") {
            if (toks.size() != 1) throw SyntaxError(line_no, toks[1].column, "unexpected token after .end");
            state = State::Done;
            if (eol == text.size()) break;
            continue;
        }
        if (head.text.starts_with('.'))
            throw SyntaxError(line_no, head.column, "unknown directive '" + std::string(head.text) + "'");

        Device dev;
        const char letter = head.text[0];
        std::size_t expected = 0;
        switch (letter) {
        case 'M': expected = 6; break;
        case 'Q': expected = 5; break;
        case 'R': dev.kind = DeviceKind::R; expected = 3; break;
        case 'C': dev.kind = DeviceKind::C; expected = 3; break;
        case 'L': dev.kind = DeviceKind::L; expected = 3; break;
        case 'D': dev.kind = DeviceKind::D; expected = 3; break;
        default:
            throw Error(ErrorCode::UnknownDeviceKind, "line " + std::to_string(line_no) + ": unknown device '" +
                                                          std::string(head.text) + "'");
        }
        if (toks.size() != expected)
            throw Error(ErrorCode::ArityMismatch, "line " + std::to_string(line_no) + ": device " +
                                                      std::string(head.text) + " has " +
                                                      std::to_string(toks.size() - 1) + " fields, expected " +
                                                      std::to_string(expected - 1));
        if (letter == 'M' || letter == 'Q') {
            std::string_view model = toks.back().text;
            if (letter == 'M' && model == "NMOS") dev.kind = DeviceKind::NMOS;
            else if (letter == 'M' && model == "PMOS") dev.kind = DeviceKind::PMOS;
            else if (letter == 'Q' && model == "NPN") dev.kind = DeviceKind::NPN;
            else if (letter == 'Q' && model == "PNP") dev.kind = DeviceKind::PNP;
            else
                throw Error(ErrorCode::UnknownDeviceKind, "line " + std::to_string(line_no) + ": unknown model '" +
                                                              std::string(model) + "'");
        }
        // MOS lines carry an element letter in front of the id (MNM1 -> NM1).
        dev.id = std::string(letter == 'M' ? head.text.substr(1) : head.text);
        auto prefix = kind_prefix(dev.kind);
        if (!dev.id.starts_with(prefix) || dev.id.size() <= prefix.size() || !is_valid_net_name(dev.id))
            throw SyntaxError(line_no, head.column,
                              "device id '" + dev.id + "' must start with '" + std::string(prefix) + "'");
        auto roles = pin_roles(dev.kind);
        for (std::size_t i = 0; i < roles.size(); ++i) {
            const auto& t = toks[1 + i];
            if (!is_valid_net_name(t.text))
                throw SyntaxError(line_no, t.column, "invalid net name '" + std::string(t.text) + "'");
            dev.pins.push_back(Pin{roles[i], std::string(t.text)});
        }
        if (!ids.insert(dev.id).second)
            throw Error(ErrorCode::DuplicateDeviceId,
                        "line " + std::to_string(line_no) + ": duplicate device id " + dev.id);
        devices.push_back(std::move(dev));
        if (eol == text.size()) break;
    }
    if (state == State::Header) throw SyntaxError(line_no, 1, "missing '.circuit' header");
    if (state == State::Body) throw SyntaxError(line_no, 1, "missing '.end'");
    return make_circuit(std::move(name), type, std::move(devices));
}

std::string render_netlist(const Circuit& circuit) {
    std::ostringstream os;
    os << ".circuit " << circuit.name << ' ' << to_string(circuit.type) << '\n';
    for (const auto& d : circuit.devices) {
        if (d.kind == DeviceKind::NMOS || d.kind == DeviceKind::PMOS) os << 'M';
        os << d.id;
        for (const auto& p : d.pins) os << ' ' << p.net;
        if (d.kind == DeviceKind::NMOS || d.kind == DeviceKind::PMOS || d.kind == DeviceKind::NPN ||
            d.kind == DeviceKind::PNP)
            os << ' ' << to_string(d.kind);
        os << '\n';
    }
    os << ".end\n";
    return os.str();
}

Circuit load_netlist(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_netlist(ss.str());
}

std::vector<std::filesystem::path> list_netlists(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
        if (entry.is_regular_file() && entry.path().extension() == ".ckt") out.push_back(entry.path());
    if (ec) throw Error(ErrorCode::IoError, "cannot list " + dir.string());
    std::sort(out.begin(), out.end());
    return out;
}

Circuit generate_random_circuit(std::uint64_t seed, int n_devices, CircuitType type) {
    if (n_devices < 2) throw Error(ErrorCode::InvalidSize, "n_devices must be >= 2");
    std::mt19937_64 rng(seed);
    auto uniform = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    auto chance = [&](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };

    std::map<std::string, int> counters;
    auto next_id = [&](DeviceKind k) {
        std::string prefix(kind_prefix(k));
        return prefix + std::to_string(++counters[prefix]);
    };
    auto pick_kind = [&]() {
        // Weighted toward MOS devices, as in typical analog topologies.
        static constexpr std::array<std::pair<DeviceKind, int>, 8> weights = {{
            {DeviceKind::NMOS, 34}, {DeviceKind::PMOS, 30}, {DeviceKind::R, 12}, {DeviceKind::C, 12},
            {DeviceKind::NPN, 3},   {DeviceKind::PNP, 3},   {DeviceKind::L, 3},  {DeviceKind::D, 3},
        }};
        std::size_t r = uniform(100);
        for (auto [k, w] : weights) {
            if (r < static_cast<std::size_t>(w)) return k;
            r -= static_cast<std::size_t>(w);
        }
        return DeviceKind::NMOS;
    };

    std::vector<std::string> used_nets;
    auto note_net = [&](const std::string& n) {
        if (std::find(used_nets.begin(), used_nets.end(), n) == used_nets.end()) used_nets.push_back(n);
    };
    std::vector<std::string> terminal_pool = {"VDD", "VSS", "VIN1", "VOUT1"};
    int internal = 0;

    std::vector<Device> devices;

    // Seed device across the supplies.
    {
        std::array<DeviceKind, 4> seeds = {DeviceKind::R, DeviceKind::C, DeviceKind::R, DeviceKind::C};
        Device d{.id = "", .kind = seeds[uniform(seeds.size())], .pins = {}};
        d.id = next_id(d.kind);
        d.pins = {{PinRole::A, "VDD"}, {PinRole::B, "VSS"}};
        devices.push_back(d);
        note_net("VDD");
        note_net("VSS");
    }
    // Input transistor carries the IO terminals.
    {
        Device d{.id = "", .kind = chance(0.5) ? DeviceKind::NMOS : DeviceKind::PMOS, .pins = {}};
        d.id = next_id(d.kind);
        std::string rail = d.kind == DeviceKind::NMOS ? "VSS" : "VDD";
        d.pins = {{PinRole::D, "VOUT1"}, {PinRole::G, "VIN1"}, {PinRole::S, rail}, {PinRole::B, rail}};
        devices.push_back(d);
        note_net("VOUT1");
        note_net("VIN1");
    }
    for (int i = 2; i < n_devices; ++i) {
        if (i == 5) terminal_pool.push_back("VB1");
        if (i == 8) terminal_pool.push_back("VIN2");
        Device d{.id = "", .kind = pick_kind(), .pins = {}};
        d.id = next_id(d.kind);
        auto roles = pin_roles(d.kind);
        std::size_t anchor = uniform(roles.size());
        for (std::size_t p = 0; p < roles.size(); ++p) {
            std::string net;
            if (p == anchor) {
                net = used_nets[uniform(used_nets.size())];
            } else {
                std::size_t r = uniform(100);
                if (r < 45) net = used_nets[uniform(used_nets.size())];
                else if (r < 65) net = terminal_pool[uniform(terminal_pool.size())];
                else net = "n" + std::to_string(++internal);
            }
            d.pins.push_back({roles[p], net});
        }
        for (const auto& p : d.pins) note_net(p.net);
        devices.push_back(std::move(d));
    }
    std::string name = "rand_" + std::string(to_string(type)) + "_" + std::to_string(seed) + "_" +
                       std::to_string(n_devices);
    std::transform(name.begin(), name.end(), name.begin(), [](char c) { return static_cast<char>(std::tolower(c)); });
    return make_circuit(std::move(name), type, std::move(devices));
}

} // namespace cktfed
