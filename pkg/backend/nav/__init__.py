# Navigation package
