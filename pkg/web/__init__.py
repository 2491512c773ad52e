# Web interface layer for bocoa
