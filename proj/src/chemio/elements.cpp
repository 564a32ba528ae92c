#include "sgc/chemio.hpp"

#include <algorithm>
#include <cctype>

namespace sgc::chem {
namespace {

struct ElementInfo {
  const char* symbol;
  double covalent_radius;
};

// Index = atomic number. Radii: Cordero et al., Dalton Trans. 2008 (sp3 C,
// low-spin transition metals). Entries past Cm fall back to 1.5 Å.
constexpr ElementInfo kElements[] = {
    {"*", 0.00},  {"H", 0.31},  {"He", 0.28}, {"Li", 1.28}, {"Be", 0.96}, {"B", 0.84},
    {"C", 0.76},  {"N", 0.71},  {"O", 0.66},  {"F", 0.57},  {"Ne", 0.58}, {"Na", 1.66},
    {"Mg", 1.41}, {"Al", 1.21}, {"Si", 1.11}, {"P", 1.07},  {"S", 1.05},  {"Cl", 1.02},
    {"Ar", 1.06}, {"K", 2.03},  {"Ca", 1.76}, {"Sc", 1.70}, {"Ti", 1.60}, {"V", 1.53},
    {"Cr", 1.39}, {"Mn", 1.39}, {"Fe", 1.32}, {"Co", 1.26}, {"Ni", 1.24}, {"Cu", 1.32},
    {"Zn", 1.22}, {"Ga", 1.22}, {"Ge", 1.20}, {"As", 1.19}, {"Se", 1.20}, {"Br", 1.20},
    {"Kr", 1.16}, {"Rb", 2.20}, {"Sr", 1.95}, {"Y", 1.90},  {"Zr", 1.75}, {"Nb", 1.64},
    {"Mo", 1.54}, {"Tc", 1.47}, {"Ru", 1.46}, {"Rh", 1.42}, {"Pd", 1.39}, {"Ag", 1.45},
    {"Cd", 1.44}, {"In", 1.42}, {"Sn", 1.39}, {"Sb", 1.39}, {"Te", 1.38}, {"I", 1.39},
    {"Xe", 1.40}, {"Cs", 2.44}, {"Ba", 2.15}, {"La", 2.07}, {"Ce", 2.04}, {"Pr", 2.03},
    {"Nd", 2.01}, {"Pm", 1.99}, {"Sm", 1.98}, {"Eu", 1.98}, {"Gd", 1.96}, {"Tb", 1.94},
    {"Dy", 1.92}, {"Ho", 1.92}, {"Er", 1.89}, {"Tm", 1.90}, {"Yb", 1.87}, {"Lu", 1.87},
    {"Hf", 1.75}, {"Ta", 1.70}, {"W", 1.62},  {"Re", 1.51}, {"Os", 1.44}, {"Ir", 1.41},
    {"Pt", 1.36}, {"Au", 1.36}, {"Hg", 1.32}, {"Tl", 1.45}, {"Pb", 1.46}, {"Bi", 1.48},
    {"Po", 1.40}, {"At", 1.50}, {"Rn", 1.50}, {"Fr", 2.60}, {"Ra", 2.21}, {"Ac", 2.15},
    {"Th", 2.06}, {"Pa", 2.00}, {"U", 1.96},  {"Np", 1.90}, {"Pu", 1.87}, {"Am", 1.80},
    {"Cm", 1.69}, {"Bk", 1.50}, {"Cf", 1.50}, {"Es", 1.50}, {"Fm", 1.50}, {"Md", 1.50},
    {"No", 1.50}, {"Lr", 1.50},
};
constexpr int kElementCount = static_cast<int>(std::size(kElements));

}  // namespace

int element_from_symbol(std::string_view symbol) {
  while (!symbol.empty() && std::isspace(static_cast<unsigned char>(symbol.front())))
    symbol.remove_prefix(1);
  while (!symbol.empty() && std::isspace(static_cast<unsigned char>(symbol.back())))
    symbol.remove_suffix(1);
  if (symbol.empty() || symbol.size() > 2) return 0;
  std::string canon(symbol);
  canon[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(canon[0])));
  if (canon.size() == 2)
    canon[1] = static_cast<char>(std::tolower(static_cast<unsigned char>(canon[1])));
  if (canon == "D" || canon == "T") return 1;
  for (int z = 1; z < kElementCount; ++z)
    if (canon == kElements[z].symbol) return z;
  return 0;
}

std::string element_symbol(int atomic_number) {
  if (atomic_number <= 0 || atomic_number >= kElementCount) return "*";
  return kElements[atomic_number].symbol;
}

double covalent_radius(int atomic_number) {
  if (atomic_number <= 0 || atomic_number >= kElementCount) return 1.5;
  return kElements[atomic_number].covalent_radius;
}

}  // namespace sgc::chem
