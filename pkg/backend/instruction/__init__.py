# Instruction package
