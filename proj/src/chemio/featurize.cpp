#include "sgc/chemio.hpp"
#include "sgc/error.hpp"

namespace sgc::chem {

ElementVocab ElementVocab::from_symbols(const std::vector<std::string>& symbols) {
  ElementVocab v;
  for (const auto& s : symbols) {
    int z = element_from_symbol(s);
    if (z == 0) throw ConfigError("unknown element in vocabulary: '" + s + "'");
    for (int e : v.elements)
      if (e == z) throw ConfigError("duplicate element in vocabulary: '" + s + "'");
    v.elements.push_back(z);
  }
  return v;
}

ElementVocab ElementVocab::default_vocab() {
  return from_symbols({"H", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I"});
}

std::vector<std::string> ElementVocab::symbols() const {
  std::vector<std::string> out;
  for (int z : elements) out.push_back(element_symbol(z));
  return out;
}

std::size_t ElementVocab::slot(int atomic_number) const {
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i] == atomic_number) return i;
  return elements.size();
}

std::size_t feature_width(const ElementVocab& vocab) {
  return vocab.width() + 1 + kHybridizationCount + 1 + 4;
}

FeatureMatrix featurize(const MolecularSystem& system, const ElementVocab& vocab) {
  FeatureMatrix x;
  x.rows = system.atoms.size();
  x.cols = feature_width(vocab);
  x.data.assign(x.rows * x.cols, 0.0f);
  const std::size_t charge_col = vocab.width();
  const std::size_t hyb_col = charge_col + 1;
  const std::size_t arom_col = hyb_col + kHybridizationCount;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const Atom& a = system.atoms[i];
    float* row = x.data.data() + i * x.cols;
    row[vocab.slot(a.element)] = 1.0f;
    row[charge_col] = static_cast<float>(a.formal_charge);
    row[hyb_col + static_cast<std::size_t>(a.hybridization)] = 1.0f;
    row[arom_col] = a.is_aromatic ? 1.0f : 0.0f;
    row[arom_col + 1] = static_cast<float>(a.degree);
    row[arom_col + 2] = static_cast<float>(a.total_hydrogens);
    row[arom_col + 3] = static_cast<float>(a.implicit_hydrogens);
    row[arom_col + 4] = static_cast<float>(a.radical_electrons);
  }
  return x;
}

}  // namespace sgc::chem
