# EAM package
